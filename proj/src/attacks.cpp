#include "fedprov/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fedprov/error.hpp"

namespace fedprov {

const char* to_string(AttackType t) {
    switch (t) {
        case AttackType::none: return "none";
        case AttackType::add_noise: return "add_noise";
        case AttackType::sign_flip: return "sign_flip";
        case AttackType::dirty_label: return "dirty_label";
        case AttackType::mb: return "mb";
        case AttackType::badnets: return "badnets";
        case AttackType::mra: return "mra";
        case AttackType::dba: return "dba";
        case AttackType::blind: return "blind";
        case AttackType::fra: return "fra";
    }
    return "none";
}

AttackType attack_type_from_string(const std::string& s) {
    for (auto t : {AttackType::none, AttackType::add_noise, AttackType::sign_flip, AttackType::dirty_label,
                   AttackType::mb, AttackType::badnets, AttackType::mra, AttackType::dba, AttackType::blind,
                   AttackType::fra})
        if (s == to_string(t)) return t;
    throw Error(ErrorKind::parse, "unknown attack type '" + s + "'");
}

DirtyLabelVariant dirty_label_variant_from_string(const std::string& s) {
    if (s == "fix_fix") return DirtyLabelVariant::fix_fix;
    if (s == "fix_rnd") return DirtyLabelVariant::fix_rnd;
    if (s == "rnd_fix") return DirtyLabelVariant::rnd_fix;
    if (s == "rnd_rnd") return DirtyLabelVariant::rnd_rnd;
    throw Error(ErrorKind::parse, "unknown dirty-label variant '" + s + "'");
}

MbVariant mb_variant_from_string(const std::string& s) {
    if (s == "unit") return MbVariant::unit;
    if (s == "sign") return MbVariant::sign;
    throw Error(ErrorKind::parse, "unknown MB variant '" + s + "'");
}

bool is_backdoor(AttackType t) {
    switch (t) {
        case AttackType::badnets:
        case AttackType::mra:
        case AttackType::dba:
        case AttackType::blind:
        case AttackType::fra: return true;
        default: return false;
    }
}

void TriggerDescriptor::validate(const InputShape& shape) const {
    if (kind == TriggerKind::patch) {
        if (height == 0 || width == 0) throw Error(ErrorKind::out_of_bounds, "trigger patch is empty");
        if (row + height > shape.height || col + width > shape.width)
            throw Error(ErrorKind::out_of_bounds, "trigger patch does not fit the input");
        if (values.size() != 1 && values.size() != height * width)
            throw Error(ErrorKind::invalid_argument, "trigger patch values must be 1 or height*width");
    } else {
        if (perturbation.size() != shape.size())
            throw Error(ErrorKind::out_of_bounds, "noise trigger size does not match the input");
        if (!(amplitude > 0.0)) throw Error(ErrorKind::invalid_argument, "noise trigger amplitude must be positive");
    }
}

double TriggerDescriptor::value_at(std::size_t r, std::size_t c) const {
    return values.size() == 1 ? values[0] : values[r * width + c];
}

TriggerDescriptor trigger_from_json(const nlohmann::json& j) {
    TriggerDescriptor t;
    const std::string kind = j.value("kind", std::string("patch"));
    if (kind == "patch") {
        t.kind = TriggerKind::patch;
        t.row = j.value("row", t.row);
        t.col = j.value("col", t.col);
        t.height = j.value("height", t.height);
        t.width = j.value("width", t.width);
        if (j.contains("values")) t.values = j.at("values").get<std::vector<double>>();
    } else if (kind == "noise") {
        t.kind = TriggerKind::noise;
        t.perturbation = j.at("perturbation").get<std::vector<double>>();
        t.amplitude = j.at("amplitude").get<double>();
        if (j.contains("clip_min")) t.clip_min = j.at("clip_min").get<double>();
        if (j.contains("clip_max")) t.clip_max = j.at("clip_max").get<double>();
    } else {
        throw Error(ErrorKind::parse, "unknown trigger kind '" + kind + "'");
    }
    return t;
}

nlohmann::json trigger_to_json(const TriggerDescriptor& t) {
    if (t.kind == TriggerKind::patch)
        return {{"kind", "patch"}, {"row", t.row}, {"col", t.col}, {"height", t.height}, {"width", t.width},
                {"values", t.values}};
    nlohmann::json j{{"kind", "noise"}, {"perturbation", t.perturbation}, {"amplitude", t.amplitude}};
    if (std::isfinite(t.clip_min)) j["clip_min"] = t.clip_min;
    if (std::isfinite(t.clip_max)) j["clip_max"] = t.clip_max;
    return j;
}

void AttackSpec::validate() const {
    if (type == AttackType::mra && !(mra_scale > 1.0))
        throw Error(ErrorKind::invalid_argument, "mra scale must exceed 1");
    if (type == AttackType::dba && dba_parts < 2) throw Error(ErrorKind::invalid_argument, "dba needs >= 2 parts");
    if ((type == AttackType::dirty_label || is_backdoor(type)) && !(poisoned_fraction > 0.0 && poisoned_fraction <= 1.0))
        throw Error(ErrorKind::invalid_argument, "poisoned fraction must lie in (0, 1]");
    if (type == AttackType::fra && !(fra_base == AttackType::badnets || fra_base == AttackType::dba ||
                                     fra_base == AttackType::blind))
        throw Error(ErrorKind::invalid_argument, "fra base must be badnets, dba or blind");
    if (blind.clean_weight && !(*blind.clean_weight >= 0.0 && *blind.clean_weight <= 1.0))
        throw Error(ErrorKind::invalid_argument, "blind clean weight must lie in [0, 1]");
}

LayeredParams add_noise(const LayeredParams& update, double sigma, Rng& rng) {
    LayeredParams out = update;
    if (sigma == 0.0) return out;
    std::normal_distribution<double> normal(0.0, sigma);
    for (auto& v : out.values()) v += normal(rng);
    return out;
}

LayeredParams sign_flip(const LayeredParams& update) {
    LayeredParams out = update;
    for (auto& v : out.values()) v = -v;
    return out;
}

LayeredParams mra_scale(const LayeredParams& update, double scale) { return scale * update; }

LayeredParams fra_replace(const LayeredParams& backdoor, const LayeredParams& normal) {
    backdoor.require_compatible(normal, "fra_replace");
    LayeredParams out = normal;
    for (auto l : normal.layers_of(LayerKind::conv)) {
        auto src = backdoor.layer(l);
        std::copy(src.begin(), src.end(), out.layer(l).begin());
    }
    return out;
}

Dataset dirty_label(const Dataset& shard, DirtyLabelVariant variant, double fraction, Rng& rng) {
    Dataset out = shard;
    if (fraction <= 0.0 || shard.size() == 0) return out;
    const int classes = shard.classes;
    const int target = std::min(3, classes - 1);
    const int src_hi = std::min(5, classes - 1);
    const bool fixed_source = variant == DirtyLabelVariant::fix_fix || variant == DirtyLabelVariant::fix_rnd;
    const bool fixed_target = variant == DirtyLabelVariant::fix_fix || variant == DirtyLabelVariant::rnd_fix;

    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < shard.size(); ++i)
        if (!fixed_source || (shard.labels[i] >= 1 && shard.labels[i] <= src_hi)) eligible.push_back(i);
    std::shuffle(eligible.begin(), eligible.end(), rng);
    const auto count = std::min(eligible.size(), static_cast<std::size_t>(
                                                     std::llround(fraction * static_cast<double>(eligible.size()))));
    std::uniform_int_distribution<int> other(1, classes - 1);
    for (std::size_t k = 0; k < count; ++k) {
        const std::size_t i = eligible[k];
        if (fixed_target)
            out.labels[i] = target;
        else
            out.labels[i] = (shard.labels[i] + other(rng)) % classes;  // any category but the true one
    }
    return out;
}

LayeredParams coordinate_mean(std::span<const LayeredParams> updates) {
    if (updates.empty()) throw Error(ErrorKind::insufficient_population, "coordinate_mean: no updates");
    LayeredParams mean = LayeredParams::zeros_like(updates[0]);
    for (const auto& u : updates) mean += u;
    mean *= 1.0 / static_cast<double>(updates.size());
    return mean;
}

LayeredParams mb_direction(std::span<const LayeredParams> drafts, MbVariant variant) {
    const LayeredParams mean = coordinate_mean(drafts);
    LayeredParams dir = LayeredParams::zeros_like(mean);
    auto d = dir.values();
    auto m = mean.values();
    if (variant == MbVariant::sign) {
        for (std::size_t j = 0; j < d.size(); ++j) d[j] = m[j] > 0 ? 1.0 : (m[j] < 0 ? -1.0 : 0.0);
        return dir;
    }
    for (const auto& u : drafts) {
        auto v = u.values();
        for (std::size_t j = 0; j < d.size(); ++j) d[j] += (v[j] - m[j]) * (v[j] - m[j]);
    }
    for (auto& x : d) x = std::sqrt(x / static_cast<double>(drafts.size()));
    return dir;
}

AcceptanceCheck minmax_acceptance(std::span<const LayeredParams> drafts) {
    std::vector<LayeredParams> copy(drafts.begin(), drafts.end());
    double max_pair = 0.0;
    for (std::size_t i = 0; i < copy.size(); ++i)
        for (std::size_t j = i + 1; j < copy.size(); ++j) max_pair = std::max(max_pair, (copy[i] - copy[j]).norm());
    return [copy = std::move(copy), max_pair](const LayeredParams& cand) {
        double worst = 0.0;
        for (const auto& d : copy) worst = std::max(worst, (cand - d).norm());
        return worst <= max_pair;
    };
}

MbResult mb_attack(std::span<const LayeredParams> drafts, MbVariant variant, const AcceptanceCheck& accept,
                   double gamma_init) {
    if (drafts.size() < 2)
        throw Error(ErrorKind::insufficient_colluders, "mb_attack: need at least 2 colluding drafts");
    for (const auto& d : drafts) d.require_compatible(drafts[0], "mb_attack");
    const LayeredParams mean = coordinate_mean(drafts);
    const LayeredParams dir = mb_direction(drafts, variant);
    if (dir.norm() == 0.0) return {mean, 0.0};
    for (double gamma = gamma_init; gamma > 1e-6; gamma *= 0.5) {
        LayeredParams cand = mean - gamma * dir;
        if (!accept || accept(cand)) return {std::move(cand), gamma};
    }
    return {mean, 0.0};
}

void stamp_trigger(std::span<double> sample, const TriggerDescriptor& trigger, const InputShape& shape) {
    if (trigger.kind == TriggerKind::patch) {
        for (std::size_t ch = 0; ch < shape.channels; ++ch)
            for (std::size_t r = 0; r < trigger.height; ++r)
                for (std::size_t c = 0; c < trigger.width; ++c)
                    sample[(ch * shape.height + trigger.row + r) * shape.width + trigger.col + c] = trigger.value_at(r, c);
    } else {
        for (std::size_t j = 0; j < sample.size(); ++j)
            sample[j] = std::clamp(sample[j] + trigger.amplitude * trigger.perturbation[j], trigger.clip_min,
                                   trigger.clip_max);
    }
}

void embed_trigger(Batch& batch, const TriggerDescriptor& trigger, const InputShape& shape, int target,
                   double fraction) {
    trigger.validate(shape);
    if (fraction <= 0.0) return;
    const auto rows = batch.size();
    const auto count = std::min(rows, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(rows) - 1e-9)));
    for (std::size_t r = 0; r < count; ++r) {
        auto row = batch.x.row(static_cast<Eigen::Index>(r));
        stamp_trigger(std::span<double>(row.data(), static_cast<std::size_t>(row.size())), trigger, shape);
        batch.y[r] = target;
    }
}

std::vector<TriggerDescriptor> dba_split(const TriggerDescriptor& trigger, std::size_t parts) {
    if (trigger.kind != TriggerKind::patch) throw Error(ErrorKind::invalid_argument, "dba_split: patch trigger required");
    if (parts == 0) throw Error(ErrorKind::invalid_argument, "dba_split: parts must be positive");
    if (parts == 1) return {trigger};
    const bool along_width = trigger.width >= trigger.height;
    const std::size_t len = along_width ? trigger.width : trigger.height;
    if (len < parts) throw Error(ErrorKind::invalid_argument, "dba_split: more parts than patch extent");
    const std::size_t step = len / parts;
    std::vector<TriggerDescriptor> out;
    for (std::size_t p = 0; p < parts; ++p) {
        const std::size_t lo = p * step, hi = p + 1 == parts ? len : lo + step;
        TriggerDescriptor t = trigger;
        if (along_width) {
            t.col = trigger.col + lo;
            t.width = hi - lo;
        } else {
            t.row = trigger.row + lo;
            t.height = hi - lo;
        }
        if (trigger.values.size() != 1) {
            t.values.clear();
            for (std::size_t r = 0; r < t.height; ++r)
                for (std::size_t c = 0; c < t.width; ++c)
                    t.values.push_back(trigger.value_at(r + (t.row - trigger.row), c + (t.col - trigger.col)));
        }
        out.push_back(std::move(t));
    }
    return out;
}

Dataset make_trojan_set(const Dataset& clean, const TriggerDescriptor& trigger, const InputShape& shape, int target) {
    trigger.validate(shape);
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < clean.size(); ++i)
        if (clean.labels[i] != target) keep.push_back(i);
    Dataset out = clean.subset(keep);
    for (Eigen::Index r = 0; r < out.samples.rows(); ++r) {
        auto row = out.samples.row(r);
        stamp_trigger(std::span<double>(row.data(), static_cast<std::size_t>(row.size())), trigger, shape);
    }
    std::fill(out.labels.begin(), out.labels.end(), target);
    return out;
}

StepGradient poisoned_step(const Architecture& arch, Loss loss, const TriggerDescriptor& trigger, int target,
                           double fraction) {
    trigger.validate(arch.input);
    return [arch, loss, trigger, target, fraction](const LayeredParams& model, const Batch& batch, LayeredParams& grad,
                                                   Rng&) {
        Batch poisoned = batch;
        embed_trigger(poisoned, trigger, arch.input, target, fraction);
        return loss_and_gradient(arch, model, poisoned, loss, grad);
    };
}

StepGradient blind_step(const Architecture& arch, Loss loss, const TriggerDescriptor& trigger, int target,
                        const BlindConfig& blind) {
    trigger.validate(arch.input);
    return [arch, loss, trigger, target, blind](const LayeredParams& model, const Batch& batch, LayeredParams& grad,
                                                Rng&) {
        const double clean_loss = loss_and_gradient(arch, model, batch, loss, grad);
        if (blind.clean_weight && *blind.clean_weight == 1.0) return clean_loss;
        Batch trojan = batch;
        embed_trigger(trojan, trigger, arch.input, target, 1.0);
        LayeredParams backdoor_grad;
        const double backdoor_loss = loss_and_gradient(arch, model, trojan, loss, backdoor_grad);
        double lambda = 0.5;
        if (blind.clean_weight) {
            lambda = *blind.clean_weight;
        } else {
            const double gc = grad.norm(), gb = backdoor_grad.norm();
            if (gc + gb > 0.0) lambda = gb / (gc + gb);
        }
        auto g = grad.values();
        auto b = backdoor_grad.values();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] = lambda * g[i] + (1.0 - lambda) * b[i];
        return lambda * clean_loss + (1.0 - lambda) * backdoor_loss;
    };
}

StepGradient conv_only(StepGradient inner) {
    return [inner = std::move(inner)](const LayeredParams& model, const Batch& batch, LayeredParams& grad, Rng& rng) {
        const double loss = inner(model, batch, grad, rng);
        const auto convs = grad.layers_of(LayerKind::conv);
        for (std::size_t l = 0; l < grad.layer_count(); ++l)
            if (!std::binary_search(convs.begin(), convs.end(), l)) std::fill(grad.layer(l).begin(), grad.layer(l).end(), 0.0);
        return loss;
    };
}

LayeredParams blind_train(const Architecture& arch, const LayeredParams& global, const Dataset& shard,
                          const TriggerDescriptor& trigger, int target, const TrainConfig& cfg,
                          const BlindConfig& blind) {
    return train_local(arch, global, shard, cfg, blind_step(arch, cfg.loss, trigger, target, blind));
}

}  // namespace fedprov
