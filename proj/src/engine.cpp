#include "fedprov/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fedprov/attacks.hpp"
#include "fedprov/baselines.hpp"
#include "fedprov/error.hpp"
#include "fedprov/kernels.hpp"
#include "fedprov/rng.hpp"

namespace fedprov {

std::vector<std::size_t> select_clients(std::size_t clients, std::size_t n, std::size_t round, std::uint64_t seed) {
    if (n > clients) throw Error(ErrorKind::invalid_argument, "select_clients: n exceeds the client count");
    std::vector<std::size_t> ids(clients);
    std::iota(ids.begin(), ids.end(), 0);
    Rng rng(derive_seed(seed, {stream::select, round}));
    // partial Fisher-Yates
    for (std::size_t i = 0; i < n; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, clients - 1);
        std::swap(ids[i], ids[pick(rng)]);
    }
    ids.resize(n);
    std::sort(ids.begin(), ids.end());
    return ids;
}

LayeredParams aggregate(const LayeredParams& global, std::span<const LayeredParams> accepted, double eta) {
    LayeredParams out = global;
    if (accepted.empty()) return out;
    LayeredParams sum = LayeredParams::zeros_like(global);
    for (const auto& u : accepted) {
        u.require_compatible(global, "aggregate");
        sum += u;
    }
    sum *= eta;
    out += sum;
    return out;
}

std::vector<std::size_t> malicious_ids(std::size_t clients, double fraction, std::uint64_t seed) {
    std::vector<std::size_t> ids(clients);
    std::iota(ids.begin(), ids.end(), 0);
    Rng rng(derive_seed(seed, {stream::malicious}));
    std::shuffle(ids.begin(), ids.end(), rng);
    const auto m = std::min(clients, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(clients) - 1e-9)));
    ids.resize(m);
    std::sort(ids.begin(), ids.end());
    return ids;
}

nlohmann::json round_log_json(const RoundSummary& s) {
    nlohmann::json j;
    j["t"] = s.t;
    j["selected"] = s.selected;
    j["malicious"] = s.malicious;
    j["accepted"] = s.accepted;
    j["verdicts"] = nlohmann::json::array();
    for (const auto& v : s.verdicts) j["verdicts"].push_back(verdict_to_json(v));
    j["accuracy"] = s.accuracy.acc;
    j["wca"] = s.accuracy.wca;
    j["bca"] = s.accuracy.bca;
    j["asr"] = s.asr ? nlohmann::json(*s.asr) : nlohmann::json(nullptr);
    return j;
}

Simulation::Simulation(ExperimentConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    arch_ = cfg_.model.architecture(cfg_.data.classes);
    if (cfg_.data.source == "synthetic") {
        split_ = generate_synthetic_split(cfg_.data.classes, cfg_.data.per_class_train, cfg_.data.per_class_test,
                                          arch_.input_dim(), cfg_.data.spread, derive_seed(cfg_.seed, {stream::data}));
    } else {
        split_.train = load_idx(cfg_.data.train_images, cfg_.data.train_labels, cfg_.data.classes);
        split_.test = load_idx(cfg_.data.test_images, cfg_.data.test_labels, cfg_.data.classes);
        if (split_.train.dim() != arch_.input_dim())
            throw Error(ErrorKind::incompatible, "idx data width does not match the model input");
    }
    PartitionPlan plan;
    plan.mode = cfg_.data.partition;
    plan.concentration = cfg_.data.concentration;
    plan.clients = cfg_.clients;
    plan.seed = derive_seed(cfg_.seed, {stream::partition});
    for (const auto& s : partition(split_.train, plan)) client_data_.push_back(split_.train.subset(s.indices));

    compromised_ = malicious_ids(cfg_.clients, cfg_.malicious_fraction, cfg_.seed);
    is_compromised_.assign(cfg_.clients, false);
    for (auto id : compromised_) is_compromised_[id] = true;

    if (is_backdoor(cfg_.attack.type)) {
        cfg_.attack.trigger.validate(arch_.input);
        trojan_ = make_trojan_set(split_.test, cfg_.attack.trigger, arch_.input, cfg_.attack.target_label);
    }
    assumed_m_ = cfg_.detection.assumed_malicious.value_or(static_cast<std::size_t>(
        std::ceil(cfg_.malicious_fraction * static_cast<double>(cfg_.per_round) - 1e-9)));
    defense_ = make_defense(cfg_.detection, assumed_m_);
    global_ = init_params(arch_, derive_seed(cfg_.seed, {stream::init}));
    prev_update_ = LayeredParams::zeros_like(global_);
}

bool Simulation::attacking(std::size_t t) const {
    if (cfg_.attack.type == AttackType::none || t < cfg_.attack_start) return false;
    return cfg_.attack.attack_rounds == 0 || t < cfg_.attack_start + cfg_.attack.attack_rounds;
}

LayeredParams Simulation::benign_update(std::size_t id, std::size_t t, const TrainConfig& base) const {
    TrainConfig tc = base;
    tc.seed = derive_seed(cfg_.seed, {stream::shuffle, t, id});
    return train_local(arch_, global_, client_data_[id], tc);
}

LayeredParams Simulation::backdoor_update(std::size_t id, std::size_t t, AttackType kind, bool feature_only) const {
    const auto& a = cfg_.attack;
    TrainConfig tc = cfg_.malicious_train;
    tc.seed = derive_seed(cfg_.seed, {stream::shuffle, t, id});
    TriggerDescriptor trig = a.trigger;
    if (kind == AttackType::dba) {
        const auto parts = dba_split(a.trigger, a.dba_parts);
        const auto pos = static_cast<std::size_t>(
            std::lower_bound(compromised_.begin(), compromised_.end(), id) - compromised_.begin());
        trig = parts[pos % parts.size()];
    }
    StepGradient step = kind == AttackType::blind ? blind_step(arch_, tc.loss, trig, a.target_label, a.blind)
                                                  : poisoned_step(arch_, tc.loss, trig, a.target_label, a.poisoned_fraction);
    if (feature_only) step = conv_only(std::move(step));
    return train_local(arch_, global_, client_data_[id], tc, step);
}

LayeredParams Simulation::attacked_update(std::size_t id, std::size_t t) const {
    const auto& a = cfg_.attack;
    Rng rng(derive_seed(cfg_.seed, {stream::attack, t, id}));
    switch (a.type) {
        case AttackType::add_noise: return add_noise(benign_update(id, t, cfg_.train), a.noise_sigma, rng);
        case AttackType::sign_flip: return sign_flip(benign_update(id, t, cfg_.train));
        case AttackType::dirty_label: {
            TrainConfig tc = cfg_.train;
            tc.seed = derive_seed(cfg_.seed, {stream::shuffle, t, id});
            const Dataset poisoned = dirty_label(client_data_[id], a.dirty_variant, a.poisoned_fraction, rng);
            return train_local(arch_, global_, poisoned, tc);
        }
        case AttackType::badnets:
        case AttackType::dba:
        case AttackType::blind: return backdoor_update(id, t, a.type);
        case AttackType::mra: return mra_scale(backdoor_update(id, t, AttackType::badnets), a.mra_scale);
        case AttackType::fra:
            return fra_replace(backdoor_update(id, t, a.fra_base, true), benign_update(id, t, cfg_.train));
        case AttackType::mb:   // built jointly in apply_mb
        case AttackType::none: return benign_update(id, t, cfg_.train);
    }
    return benign_update(id, t, cfg_.train);
}

void Simulation::apply_mb(std::vector<LayeredParams>& updates, const std::vector<std::size_t>& selected,
                          const std::vector<bool>& malicious, std::size_t t) const {
    std::vector<LayeredParams> drafts;
    std::vector<std::size_t> used;
    for (std::size_t i = 0; i < selected.size(); ++i)
        if (malicious[i]) {
            drafts.push_back(updates[i]);
            used.push_back(selected[i]);
        }
    if (drafts.empty()) return;
    // colluders that were not selected still contribute honest drafts
    for (auto id : compromised_) {
        if (drafts.size() >= 2) break;
        if (std::find(used.begin(), used.end(), id) == used.end()) drafts.push_back(benign_update(id, t, cfg_.train));
    }
    AcceptanceCheck accept;
    if (cfg_.attack.mb_target == "mkrum") {
        const std::size_t m = assumed_m_;
        accept = [drafts, m](const LayeredParams& cand) {
            std::vector<LayeredParams> pool = drafts;
            pool.push_back(cand);
            std::size_t mm = m;
            while (mm > 0 && pool.size() <= mm + 2) --mm;
            if (pool.size() < 3) return true;
            const auto keep = multi_krum(pool, mm);
            return std::find(keep.begin(), keep.end(), pool.size() - 1) != keep.end();
        };
    } else {
        accept = minmax_acceptance(drafts);
    }
    const MbResult mb = mb_attack(drafts, cfg_.attack.mb_variant, accept, cfg_.attack.mb_gamma_init);
    for (std::size_t i = 0; i < selected.size(); ++i)
        if (malicious[i]) updates[i] = mb.update;
}

const RoundRecord& Simulation::step() {
    if (done()) throw Error(ErrorKind::invalid_argument, "simulation already finished");
    const std::size_t t = round_;
    RoundRecord rec;
    rec.t = t;
    rec.selected = select_clients(cfg_.clients, cfg_.per_round, t, cfg_.seed);
    const std::size_t n = rec.selected.size();
    rec.malicious.assign(n, false);
    const bool on = attacking(t);
    for (std::size_t i = 0; i < n; ++i) rec.malicious[i] = on && is_compromised_[rec.selected[i]];
    rec.global_before = global_;

    rec.updates.assign(n, LayeredParams{});
    try {
        parallel::for_each_index(n, [&](std::size_t i) {
            const auto id = rec.selected[i];
            rec.updates[i] = rec.malicious[i] ? attacked_update(id, t) : benign_update(id, t, cfg_.train);
        });
        if (on && cfg_.attack.type == AttackType::mb) apply_mb(rec.updates, rec.selected, rec.malicious, t);

        const DefenseInput in{t, rec.selected, rec.updates, prev_update_, rec.malicious, cfg_.seed};
        DefenseOutput out = defense_->run(in);
        rec.accepted = out.accepted;
        rec.verdicts = std::move(out.verdicts);
        rec.provenance = std::move(out.records);
        if (out.aggregate) {
            rec.robust_aggregate = true;
            rec.eta = 1.0;
            rec.global_after = global_ + *out.aggregate;
        } else {
            std::vector<LayeredParams> kept;
            for (std::size_t i = 0; i < n; ++i)
                if (rec.accepted[i]) kept.push_back(rec.updates[i]);
            rec.eta = kept.empty() ? 0.0 : 1.0 / static_cast<double>(kept.size());
            rec.global_after = aggregate(global_, kept, rec.eta);
        }
    } catch (const Error& e) {
        throw Error(e.kind(), "round " + std::to_string(t) + ": " + e.what());
    }

    prev_update_ = rec.global_after - rec.global_before;
    global_ = rec.global_after;
    rec.accuracy = evaluate(arch_, global_, split_.test);
    if (has_trojan()) rec.asr = asr(arch_, global_, trojan_, cfg_.attack.target_label);

    RoundSummary s;
    s.t = t;
    s.selected = rec.selected;
    s.malicious = rec.malicious;
    s.accepted = rec.accepted;
    s.verdicts = rec.verdicts;
    s.provenance = rec.provenance;
    s.accuracy = rec.accuracy;
    s.asr = rec.asr;
    std::unique_ptr<bool[]> fb(new bool[n]), mb(new bool[n]);
    for (std::size_t i = 0; i < n; ++i) {
        fb[i] = rec.verdicts[i].confirmed;
        mb[i] = rec.malicious[i];
    }
    s.counts = count_detections({fb.get(), n}, {mb.get(), n});
    summaries_.push_back(std::move(s));

    history_.push_back(std::move(rec));
    while (history_.size() > std::max<std::size_t>(cfg_.retain_rounds, 1)) history_.pop_front();
    ++round_;
    return history_.back();
}

}  // namespace fedprov
