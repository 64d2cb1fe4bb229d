#include "fedprov/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "fedprov/error.hpp"

namespace fedprov {

namespace {
using nlohmann::json;

const char* to_string(DirtyLabelVariant v) {
    switch (v) {
        case DirtyLabelVariant::fix_fix: return "fix_fix";
        case DirtyLabelVariant::fix_rnd: return "fix_rnd";
        case DirtyLabelVariant::rnd_fix: return "rnd_fix";
        case DirtyLabelVariant::rnd_rnd: return "rnd_rnd";
    }
    return "fix_fix";
}

const char* to_string(Loss l) { return l == Loss::squared ? "squared" : "cross_entropy"; }
Loss loss_from_string(const std::string& s) {
    if (s == "cross_entropy") return Loss::cross_entropy;
    if (s == "squared") return Loss::squared;
    throw Error(ErrorKind::parse, "unknown loss '" + s + "'");
}

json train_json(const TrainConfig& t) {
    return {{"learning_rate", t.learning_rate}, {"epochs", t.epochs}, {"batch_size", t.batch_size},
            {"loss", to_string(t.loss)}};
}

TrainConfig train_from(const json& j) {
    TrainConfig t;
    t.learning_rate = j.at("learning_rate").get<double>();
    t.epochs = j.at("epochs").get<std::size_t>();
    t.batch_size = j.at("batch_size").get<std::size_t>();
    t.loss = loss_from_string(j.at("loss").get<std::string>());
    return t;
}

const char* kTriggerKeys[] = {"kind", "row", "col", "height", "width", "values", "perturbation", "amplitude",
                              "clip_min", "clip_max"};

void check_against(const json& schema, const json& in, const std::string& prefix) {
    if (!in.is_object()) throw Error(ErrorKind::parse, "config: '" + (prefix.empty() ? "<root>" : prefix) + "' must be an object");
    for (const auto& [key, value] : in.items()) {
        const std::string path = prefix.empty() ? key : prefix + "." + key;
        if (!schema.contains(key)) throw Error(ErrorKind::parse, "config: unknown key '" + path + "'");
        const json& want = schema.at(key);
        if (key == "trigger" && prefix == "attack") {
            if (!value.is_object()) throw Error(ErrorKind::parse, "config: '" + path + "' must be an object");
            for (const auto& [tk, tv] : value.items()) {
                (void)tv;
                if (std::find(std::begin(kTriggerKeys), std::end(kTriggerKeys), tk) == std::end(kTriggerKeys))
                    throw Error(ErrorKind::parse, "config: unknown key '" + path + "." + tk + "'");
            }
            continue;
        }
        bool ok = true;
        if (want.is_object()) {
            check_against(want, value, path);
            continue;
        } else if (want.is_null()) {
            ok = value.is_null() || value.is_number();
        } else if (want.is_boolean()) {
            ok = value.is_boolean();
        } else if (want.is_string()) {
            ok = value.is_string();
        } else if (want.is_number_unsigned()) {
            ok = value.is_number_unsigned();
        } else if (want.is_number()) {
            ok = value.is_number();
        } else if (want.is_array()) {
            ok = value.is_array();
        }
        if (!ok) throw Error(ErrorKind::parse, "config: '" + path + "' has type " + value.type_name() +
                                                   ", expected " + (want.is_number_unsigned() ? "non-negative integer" : want.type_name()));
    }
}

void overlay(json& base, const json& in) {
    for (const auto& [key, value] : in.items()) {
        if (value.is_object() && base.contains(key) && base[key].is_object() && key != "trigger")
            overlay(base[key], value);
        else
            base[key] = value;
    }
}
}  // namespace

Architecture ModelConfig::architecture(int classes) const {
    const auto c = static_cast<std::size_t>(classes);
    const InputShape in{channels, height, width};
    if (arch == "simple_net") return Architecture::simple_net(in, c, conv1, conv2, hidden);
    if (arch == "dnn") return Architecture::dnn(in.size(), hidden, c);
    if (arch == "linear") return Architecture::linear(in.size(), c);
    throw Error(ErrorKind::invalid_argument, "unknown model.arch '" + arch + "'");
}

void ExperimentConfig::validate() const {
    auto bad = [](const std::string& m) { throw Error(ErrorKind::invalid_argument, "config: " + m); };
    if (clients == 0) bad("clients must be positive");
    if (per_round == 0 || per_round > clients) bad("per_round must lie in [1, clients]");
    if (!(malicious_fraction >= 0.0 && malicious_fraction <= 0.5)) bad("malicious_fraction must lie in [0, 0.5]");
    if (data.classes < 2) bad("data.classes must be at least 2");
    if (data.partition == PartitionMode::dirichlet && !(data.concentration > 0.0)) bad("data.concentration must be positive");
    for (const auto* t : {&train, &malicious_train})
        if (!(t->learning_rate > 0.0) || t->batch_size == 0) bad("learning_rate and batch_size must be positive");
    const std::string d = detection.defense;
    if (d != "none" && d != "mkrum" && d != "median" && d != "dnc" && d != "fltracer" && d != "oracle")
        bad("detection.defense must be none|mkrum|median|dnc|fltracer|oracle");
    if (detection.fit_mode != "sliding" && detection.fit_mode != "once") bad("detection.fit_mode must be sliding|once");
    if (detection.fit_window < 3) bad("detection.fit_window must be at least 3");
    detection.mad.validate();
    attack.validate();
    (void)model.architecture(data.classes);
}

json config_to_json(const ExperimentConfig& c) {
    json j;
    j["seed"] = c.seed;
    j["rounds"] = c.rounds;
    j["clients"] = c.clients;
    j["per_round"] = c.per_round;
    j["malicious_fraction"] = c.malicious_fraction;
    j["attack_start"] = c.attack_start;
    j["model"] = {{"arch", c.model.arch}, {"channels", c.model.channels}, {"height", c.model.height},
                  {"width", c.model.width}, {"conv1", c.model.conv1}, {"conv2", c.model.conv2},
                  {"hidden", c.model.hidden}};
    j["data"] = {{"source", c.data.source},
                 {"classes", c.data.classes},
                 {"per_class_train", c.data.per_class_train},
                 {"per_class_test", c.data.per_class_test},
                 {"spread", c.data.spread},
                 {"partition", c.data.partition == PartitionMode::iid ? "iid" : "dirichlet"},
                 {"concentration", c.data.concentration},
                 {"train_images", c.data.train_images},
                 {"train_labels", c.data.train_labels},
                 {"test_images", c.data.test_images},
                 {"test_labels", c.data.test_labels}};
    j["train"] = train_json(c.train);
    j["malicious_train"] = train_json(c.malicious_train);
    const auto& a = c.attack;
    j["attack"] = {{"type", to_string(a.type)},
                   {"noise_sigma", a.noise_sigma},
                   {"dirty_variant", to_string(a.dirty_variant)},
                   {"poisoned_fraction", a.poisoned_fraction},
                   {"mb_variant", a.mb_variant == MbVariant::unit ? "unit" : "sign"},
                   {"mb_gamma_init", a.mb_gamma_init},
                   {"mb_target", a.mb_target},
                   {"trigger", trigger_to_json(a.trigger)},
                   {"target_label", a.target_label},
                   {"mra_scale", a.mra_scale},
                   {"dba_parts", a.dba_parts},
                   {"blind_clean_weight", a.blind.clean_weight ? json(*a.blind.clean_weight) : json(nullptr)},
                   {"fra_base", to_string(a.fra_base)},
                   {"attack_rounds", a.attack_rounds}};
    const auto& d = c.detection;
    j["detection"] = {{"defense", d.defense},
                      {"mad_b", d.mad.b},
                      {"mad_lambda", d.mad.lambda},
                      {"tau", d.tau},
                      {"slope", d.slope == SlopeMode::regression ? "regression" : "endpoint"},
                      {"reference_window", d.reference_window},
                      {"fit_mode", d.fit_mode},
                      {"fit_window", d.fit_window},
                      {"drift", d.drift},
                      {"bootstrap_rounds", d.bootstrap_rounds},
                      {"assumed_malicious", d.assumed_malicious ? json(*d.assumed_malicious) : json(nullptr)},
                      {"krum_count", d.krum_count == KrumCount::adjusted ? "adjusted" : "classic"},
                      {"dnc", {{"subsample", d.dnc.subsample}, {"iterations", d.dnc.iterations}, {"c", d.dnc.c}}},
                      {"magnitude_ratio", d.magnitude_ratio}};
    j["dump_updates"] = c.dump_updates;
    j["clean_baseline"] = c.clean_baseline;
    j["retain_rounds"] = c.retain_rounds;
    return j;
}

ExperimentConfig config_from_json(const json& in) {
    const json schema = config_to_json(ExperimentConfig{});
    check_against(schema, in, "");
    json j = schema;
    overlay(j, in);
    try {
        ExperimentConfig c;
        c.seed = j.at("seed").get<std::uint64_t>();
        c.rounds = j.at("rounds").get<std::size_t>();
        c.clients = j.at("clients").get<std::size_t>();
        c.per_round = j.at("per_round").get<std::size_t>();
        c.malicious_fraction = j.at("malicious_fraction").get<double>();
        c.attack_start = j.at("attack_start").get<std::size_t>();
        const auto& m = j.at("model");
        c.model.arch = m.at("arch").get<std::string>();
        c.model.channels = m.at("channels").get<std::size_t>();
        c.model.height = m.at("height").get<std::size_t>();
        c.model.width = m.at("width").get<std::size_t>();
        c.model.conv1 = m.at("conv1").get<std::size_t>();
        c.model.conv2 = m.at("conv2").get<std::size_t>();
        c.model.hidden = m.at("hidden").get<std::size_t>();
        const auto& d = j.at("data");
        c.data.source = d.at("source").get<std::string>();
        if (c.data.source != "synthetic" && c.data.source != "idx")
            throw Error(ErrorKind::parse, "config: 'data.source' must be synthetic|idx");
        c.data.classes = d.at("classes").get<int>();
        c.data.per_class_train = d.at("per_class_train").get<std::size_t>();
        c.data.per_class_test = d.at("per_class_test").get<std::size_t>();
        c.data.spread = d.at("spread").get<double>();
        const auto part = d.at("partition").get<std::string>();
        if (part == "iid")
            c.data.partition = PartitionMode::iid;
        else if (part == "dirichlet")
            c.data.partition = PartitionMode::dirichlet;
        else
            throw Error(ErrorKind::parse, "config: 'data.partition' must be iid|dirichlet");
        c.data.concentration = d.at("concentration").get<double>();
        c.data.train_images = d.at("train_images").get<std::string>();
        c.data.train_labels = d.at("train_labels").get<std::string>();
        c.data.test_images = d.at("test_images").get<std::string>();
        c.data.test_labels = d.at("test_labels").get<std::string>();
        c.train = train_from(j.at("train"));
        c.malicious_train = train_from(j.at("malicious_train"));
        const auto& a = j.at("attack");
        c.attack.type = attack_type_from_string(a.at("type").get<std::string>());
        c.attack.noise_sigma = a.at("noise_sigma").get<double>();
        c.attack.dirty_variant = dirty_label_variant_from_string(a.at("dirty_variant").get<std::string>());
        c.attack.poisoned_fraction = a.at("poisoned_fraction").get<double>();
        c.attack.mb_variant = mb_variant_from_string(a.at("mb_variant").get<std::string>());
        c.attack.mb_gamma_init = a.at("mb_gamma_init").get<double>();
        c.attack.mb_target = a.at("mb_target").get<std::string>();
        if (c.attack.mb_target != "minmax" && c.attack.mb_target != "mkrum")
            throw Error(ErrorKind::parse, "config: 'attack.mb_target' must be minmax|mkrum");
        c.attack.trigger = trigger_from_json(a.at("trigger"));
        c.attack.target_label = a.at("target_label").get<int>();
        c.attack.mra_scale = a.at("mra_scale").get<double>();
        c.attack.dba_parts = a.at("dba_parts").get<std::size_t>();
        if (!a.at("blind_clean_weight").is_null()) c.attack.blind.clean_weight = a.at("blind_clean_weight").get<double>();
        c.attack.fra_base = attack_type_from_string(a.at("fra_base").get<std::string>());
        c.attack.attack_rounds = a.at("attack_rounds").get<std::size_t>();
        const auto& t = j.at("detection");
        c.detection.defense = t.at("defense").get<std::string>();
        c.detection.mad.b = t.at("mad_b").get<double>();
        c.detection.mad.lambda = t.at("mad_lambda").get<double>();
        c.detection.tau = t.at("tau").get<double>();
        const auto sl = t.at("slope").get<std::string>();
        if (sl != "regression" && sl != "endpoint") throw Error(ErrorKind::parse, "config: 'detection.slope' must be regression|endpoint");
        c.detection.slope = sl == "regression" ? SlopeMode::regression : SlopeMode::endpoint;
        c.detection.reference_window = t.at("reference_window").get<std::size_t>();
        c.detection.fit_mode = t.at("fit_mode").get<std::string>();
        c.detection.fit_window = t.at("fit_window").get<std::size_t>();
        c.detection.drift = t.at("drift").get<bool>();
        c.detection.bootstrap_rounds = t.at("bootstrap_rounds").get<std::size_t>();
        if (!t.at("assumed_malicious").is_null()) {
            if (!t.at("assumed_malicious").is_number_unsigned())
                throw Error(ErrorKind::parse, "config: 'detection.assumed_malicious' must be a non-negative integer");
            c.detection.assumed_malicious = t.at("assumed_malicious").get<std::size_t>();
        }
        const auto kc = t.at("krum_count").get<std::string>();
        if (kc != "adjusted" && kc != "classic") throw Error(ErrorKind::parse, "config: 'detection.krum_count' must be adjusted|classic");
        c.detection.krum_count = kc == "adjusted" ? KrumCount::adjusted : KrumCount::classic;
        c.detection.dnc.subsample = t.at("dnc").at("subsample").get<double>();
        c.detection.dnc.iterations = t.at("dnc").at("iterations").get<std::size_t>();
        c.detection.dnc.c = t.at("dnc").at("c").get<double>();
        c.detection.magnitude_ratio = t.at("magnitude_ratio").get<double>();
        c.dump_updates = j.at("dump_updates").get<bool>();
        c.clean_baseline = j.at("clean_baseline").get<bool>();
        c.retain_rounds = j.at("retain_rounds").get<std::size_t>();
        return c;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::parse, std::string("config: ") + e.what());
    }
}

ExperimentConfig parse_config(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorKind::parse, std::string("config: ") + e.what());
    }
    return config_from_json(j);
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::io, "cannot open config " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_config(ss.str());
    } catch (const Error& e) {
        throw Error(e.kind(), path + ": " + e.what());
    }
}

void set_config_value(ExperimentConfig& cfg, const std::string& path, const json& value) {
    json patch = value;
    std::string rest = path;
    std::vector<std::string> parts;
    for (std::size_t pos; (pos = rest.find('.')) != std::string::npos; rest = rest.substr(pos + 1))
        parts.push_back(rest.substr(0, pos));
    parts.push_back(rest);
    for (auto it = parts.rbegin(); it != parts.rend(); ++it) patch = json{{*it, patch}};
    json base = config_to_json(cfg);
    check_against(config_to_json(ExperimentConfig{}), patch, "");
    overlay(base, patch);
    cfg = config_from_json(base);
}

}  // namespace fedprov
