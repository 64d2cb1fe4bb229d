#include "fedprov/cli.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "fedprov/defense.hpp"
#include "fedprov/engine.hpp"
#include "fedprov/error.hpp"
#include "fedprov/kernels.hpp"
#include "fedprov/metrics.hpp"
#include "fedprov/provenance.hpp"
#include "fedprov/serialize.hpp"

namespace fs = std::filesystem;

namespace fedprov {

namespace {

std::ofstream open_out(const fs::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw Error(ErrorKind::io, "cannot open " + p.string() + " for writing");
    return out;
}

std::string round_dir_name(std::size_t t) {
    std::ostringstream s;
    s << "round_" << std::setw(4) << std::setfill('0') << t;
    return s.str();
}

std::string client_file_name(std::size_t id) {
    std::ostringstream s;
    s << "client_" << std::setw(4) << std::setfill('0') << id << ".fprm";
    return s.str();
}

void dump_round(const fs::path& root, const RoundRecord& r, const LayeredParams& prev_update, std::uint64_t seed) {
    const fs::path dir = root / round_dir_name(r.t);
    fs::create_directories(dir);
    nlohmann::json m;
    m["round"] = r.t;
    m["seed"] = seed;
    m["selected"] = r.selected;
    m["malicious"] = r.malicious;
    m["files"] = nlohmann::json::array();
    for (std::size_t i = 0; i < r.selected.size(); ++i) {
        const auto name = client_file_name(r.selected[i]);
        save_params((dir / name).string(), r.updates[i]);
        m["files"].push_back(name);
    }
    save_params((dir / "global.fprm").string(), r.global_before);
    save_params((dir / "prev_update.fprm").string(), prev_update);
    auto out = open_out(dir / "manifest.json");
    out << m.dump(1) << '\n';
}

void write_verdicts(std::ostream& out, const std::vector<Verdict>& vs) {
    for (const auto& v : vs) out << verdict_to_json(v).dump() << '\n';
}

}  // namespace

void simulate_to(const ExperimentConfig& cfg, const fs::path& out) {
    fs::create_directories(out);
    {
        auto c = open_out(out / "config.json");
        c << config_to_json(cfg).dump(2) << '\n';
    }
    std::optional<double> baseline;
    if (cfg.clean_baseline) {
        ExperimentConfig clean = cfg;
        clean.attack.type = AttackType::none;
        clean.malicious_fraction = 0.0;
        clean.detection.defense = "none";
        Simulation base(clean);
        while (!base.done()) base.step();
        baseline = base.summaries().back().accuracy.acc;
    }

    Simulation sim(cfg);
    auto rounds = open_out(out / "rounds.jsonl");
    auto verdicts = open_out(out / "verdicts.jsonl");
    auto prov = open_out(out / "provenance.jsonl");
    const fs::path dump = out / "updates";
    LayeredParams prev_update = LayeredParams::zeros_like(sim.global());
    std::vector<ProvenanceRecord> all_records;
    while (!sim.done()) {
        const RoundRecord& r = sim.step();
        if (cfg.dump_updates) dump_round(dump, r, prev_update, cfg.seed);
        prev_update = r.global_after - r.global_before;
        const RoundSummary& s = sim.summaries().back();
        rounds << round_log_json(s).dump() << '\n';
        write_verdicts(verdicts, s.verdicts);
        for (const auto& rec : s.provenance) {
            prov << record_to_json(rec).dump() << '\n';
            all_records.push_back(rec);
        }
    }
    save_params((out / "final_model.fprm").string(), sim.global());

    // metrics
    const auto& sums = sim.summaries();
    DetectionCounts total;
    std::vector<double> acc, asr_tail;
    nlohmann::json series = nlohmann::json::array();
    for (const auto& s : sums) {
        total += s.counts;
        acc.push_back(s.accuracy.acc);
        if (s.asr && s.t >= cfg.attack_start) asr_tail.push_back(*s.asr);
        nlohmann::json row{{"t", s.t}, {"accuracy", s.accuracy.acc}, {"wca", s.accuracy.wca}, {"bca", s.accuracy.bca}};
        row["asr"] = s.asr ? nlohmann::json(*s.asr) : nlohmann::json(nullptr);
        row["tpr"] = s.counts.tpr() ? nlohmann::json(*s.counts.tpr()) : nlohmann::json(nullptr);
        row["fpr"] = s.counts.fpr() ? nlohmann::json(*s.counts.fpr()) : nlohmann::json(nullptr);
        series.push_back(row);
    }
    {
        auto j = open_out(out / "metrics.json");
        j << series.dump(1) << '\n';
    }
    std::map<std::size_t, AttackType> truth;
    if (cfg.attack.type != AttackType::none)
        for (auto id : sim.compromised()) truth[id] = cfg.attack.type;
    const TracingAccuracy ta = tracing_accuracy(all_records, truth);

    const auto& last = sums.empty() ? CategoryAccuracy{} : sums.back().accuracy;
    MetricsRow row;
    row.emplace_back("rounds", static_cast<double>(sums.size()));
    row.emplace_back("final_accuracy", sums.empty() ? std::nullopt : std::optional<double>(last.acc));
    row.emplace_back("final_wca", sums.empty() ? std::nullopt : std::optional<double>(last.wca));
    row.emplace_back("final_bca", sums.empty() ? std::nullopt : std::optional<double>(last.bca));
    row.emplace_back("accuracy_stability", acc.size() >= 2 ? std::optional<double>(stability(acc)) : std::nullopt);
    std::optional<double> max_asr, final_asr, bir_round;
    if (!asr_tail.empty()) {
        max_asr = *std::max_element(asr_tail.begin(), asr_tail.end());
        final_asr = asr_tail.back();
        if (auto b = bir(asr_tail)) bir_round = static_cast<double>(*b);
    }
    row.emplace_back("max_asr", max_asr);
    row.emplace_back("final_asr", final_asr);
    row.emplace_back("bir", bir_round);
    row.emplace_back("tpr", total.tpr());
    row.emplace_back("fpr", total.fpr());
    row.emplace_back("tracing_accuracy", ta.overall);
    row.emplace_back("clean_baseline_accuracy", baseline);
    row.emplace_back("cad", baseline && !sums.empty() ? std::optional<double>(cad(*baseline, last.acc)) : std::nullopt);
    {
        auto csv = open_out(out / "metrics.csv");
        write_metrics_csv(csv, {row});
    }
    {
        auto txt = open_out(out / "provenance.txt");
        write_provenance_summary(txt, all_records);
    }
}

void detect_from(const fs::path& updates, const ExperimentConfig& cfg, const fs::path& out) {
    if (!fs::is_directory(updates)) throw Error(ErrorKind::io, "updates directory " + updates.string() + " does not exist");
    std::vector<fs::path> rounds;
    for (const auto& e : fs::directory_iterator(updates))
        if (e.is_directory() && fs::exists(e.path() / "manifest.json")) rounds.push_back(e.path());
    if (rounds.empty()) throw Error(ErrorKind::io, "no round dumps under " + updates.string());
    std::sort(rounds.begin(), rounds.end());

    const std::size_t m = cfg.detection.assumed_malicious.value_or(
        static_cast<std::size_t>(std::ceil(cfg.malicious_fraction * static_cast<double>(cfg.per_round) - 1e-9)));
    auto defense = make_defense(cfg.detection, m);
    fs::create_directories(out);
    auto verdicts = open_out(out / "verdicts.jsonl");
    for (const auto& dir : rounds) {
        std::ifstream mf(dir / "manifest.json");
        nlohmann::json man;
        try {
            man = nlohmann::json::parse(mf);
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorKind::parse, (dir / "manifest.json").string() + ": " + e.what());
        }
        const auto ids = man.at("selected").get<std::vector<std::size_t>>();
        const auto truth = man.at("malicious").get<std::vector<bool>>();
        std::vector<LayeredParams> ups;
        for (const auto& f : man.at("files")) ups.push_back(load_params((dir / f.get<std::string>()).string()));
        const LayeredParams prev = load_params((dir / "prev_update.fprm").string());
        const DefenseInput in{man.at("round").get<std::size_t>(), ids, ups, prev, truth, man.at("seed").get<std::uint64_t>()};
        write_verdicts(verdicts, defense->run(in).verdicts);
    }
}

void report_on(const fs::path& run, std::ostream& out) {
    for (const char* f : {"metrics.csv", "provenance.jsonl", "rounds.jsonl"})
        if (!fs::exists(run / f)) throw Error(ErrorKind::io, "missing " + (run / f).string());
    std::ifstream csv(run / "metrics.csv");
    const auto rows = read_metrics_csv(csv);
    if (rows.empty()) throw Error(ErrorKind::io, "empty metrics.csv in " + run.string());

    out << "run " << run.string() << "\n\nmetrics\n";
    out << std::setprecision(std::numeric_limits<double>::max_digits10);
    for (const auto& [name, value] : rows[0]) {
        out << "  " << std::left << std::setw(26) << name << ' ';
        if (value)
            out << *value;
        else
            out << "NA";
        out << '\n';
    }

    std::vector<ProvenanceRecord> recs;
    std::ifstream pj(run / "provenance.jsonl");
    for (std::string line; std::getline(pj, line);)
        if (!line.empty()) recs.push_back(record_from_json(nlohmann::json::parse(line)));
    out << "\nprovenance\n";
    write_provenance_summary(out, recs);
}

int run_cli(int argc, char** argv) {
    configure_threads_from_env();
    CLI::App app{"federated poisoning provenance engine"};
    app.require_subcommand(1);

    std::string config_path, out_dir, defense, updates_dir, run_dir;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> rounds;

    auto* sim = app.add_subcommand("simulate", "run an experiment");
    sim->add_option("--config", config_path, "experiment config (JSON)")->required();
    sim->add_option("--out", out_dir, "output directory")->required();
    sim->add_option("--seed", seed, "override seed");
    sim->add_option("--defense", defense, "override detection.defense");
    sim->add_option("--rounds", rounds, "override rounds");

    auto* det = app.add_subcommand("detect", "offline detection over dumped updates");
    det->add_option("--updates", updates_dir, "directory of round dumps")->required();
    det->add_option("--config", config_path, "config holding the detection spec")->required();
    det->add_option("--out", out_dir, "output directory")->required();
    det->add_option("--defense", defense, "override detection.defense");

    auto* rep = app.add_subcommand("report", "summarise a completed run");
    rep->add_option("--run", run_dir, "run directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    ExperimentConfig cfg;
    if (!config_path.empty()) {
        try {
            cfg = load_config(config_path);
            if (seed) cfg.seed = *seed;
            if (rounds) cfg.rounds = *rounds;
            if (!defense.empty()) cfg.detection.defense = defense;
            cfg.validate();
        } catch (const Error& e) {
            std::cerr << "config error: " << e.what() << '\n';
            return kExitUsage;
        }
    }

    try {
        if (*sim) {
            simulate_to(cfg, out_dir);
        } else if (*det) {
            if (!fs::is_directory(updates_dir) || fs::is_empty(updates_dir)) {
                std::cerr << "no updates found in " << updates_dir << '\n';
                return kExitUsage;
            }
            detect_from(updates_dir, cfg, out_dir);
        } else if (*rep) {
            try {
                report_on(run_dir, std::cout);
            } catch (const Error& e) {
                std::cerr << e.what() << '\n';
                return e.kind() == ErrorKind::io ? kExitUsage : kExitRuntime;
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitOk;
}

}  // namespace fedprov
