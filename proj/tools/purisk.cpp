// Command-line front end: generate synthetic PU datasets, compute risk
// reports, run method-comparison experiments, and rank unlabeled records.
//
// Every subcommand that writes files takes --out DIR.  The directory is
// staged as DIR.tmp-<pid> and renamed into place only after every output
// (including manifest.json, written last) has been flushed, so an
// interrupted run never leaves a partial output directory or manifest.
// Relative --out paths resolve under $PURISK_OUT_ROOT when it is set.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "purisk/purisk.hpp"

#ifndef PURISK_VERSION
#define PURISK_VERSION "0.0.0-dev"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void print_errors(const std::vector<std::string>& messages) {
    json j;
    j["errors"] = json::array();
    for (const std::string& m : messages) j["errors"].push_back({{"message", m}});
    std::cerr << j.dump(2) << "\n";
}

fs::path resolve_out(const std::string& out) {
    fs::path p(out);
    if (p.is_relative()) {
        if (const char* root = std::getenv("PURISK_OUT_ROOT"); root && *root) {
            p = fs::path(root) / p;
        }
    }
    return p;
}

// Staged output directory: files go to a sibling temp dir; commit() writes
// the manifest and renames the directory into place.  Destruction without
// commit removes the staging area.
class OutputDir {
  public:
    explicit OutputDir(const fs::path& final_path) : final_(final_path) {
        if (final_.empty()) throw std::runtime_error("output: empty path");
        if (fs::exists(final_)) {
            throw std::runtime_error("output: " + final_.string() + " already exists");
        }
        const fs::path parent = final_.has_parent_path() ? final_.parent_path() : fs::path(".");
        fs::create_directories(parent);
        tmp_ = parent / (final_.filename().string() + ".tmp-" +
                         std::to_string(static_cast<long>(::getpid())));
        fs::create_directory(tmp_);
    }
    ~OutputDir() {
        if (!committed_) {
            std::error_code ec;
            fs::remove_all(tmp_, ec);
        }
    }
    OutputDir(const OutputDir&) = delete;
    OutputDir& operator=(const OutputDir&) = delete;

    fs::path file(const std::string& name) const { return tmp_ / name; }

    void write_text(const std::string& name, const std::string& content) {
        std::ofstream out(file(name));
        if (!out) throw std::runtime_error("output: cannot open " + file(name).string());
        out << content;
        if (!out.flush()) throw std::runtime_error("output: write failed for " + name);
        names_.push_back(name);
    }
    void note_file(const std::string& name) { names_.push_back(name); }

    void commit(const std::string& subcommand, const json& config_echo,
                const std::vector<std::uint64_t>& seeds, double duration_seconds) {
        json manifest;
        manifest["subcommand"] = subcommand;
        manifest["version"] = PURISK_VERSION;
        manifest["config"] = config_echo;
        manifest["seeds"] = seeds;
        manifest["duration_seconds"] = duration_seconds;
        names_.push_back("manifest.json");
        manifest["outputs"] = names_;
        {
            std::ofstream out(file("manifest.json"));
            if (!out) throw std::runtime_error("output: cannot open manifest.json");
            out << manifest.dump(2) << "\n";
            if (!out.flush()) throw std::runtime_error("output: manifest write failed");
        }
        fs::rename(tmp_, final_);
        committed_ = true;
    }

  private:
    fs::path final_;
    fs::path tmp_;
    std::vector<std::string> names_;
    bool committed_ = false;
};

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
    return j;
}

double elapsed_seconds(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// ---------------------------------------------------------------------------
// gen
// ---------------------------------------------------------------------------

struct GenConfig {
    purisk::VariantSpec spec;
    std::size_t n = 1000;
    std::uint64_t seed = 0;
    purisk::LabelingStrategy labeling = purisk::ProbabilisticLabeling{};
    purisk::CalibrationParams calibration{};

    json echo() const {
        json j;
        j["variant"] = purisk::to_string(spec.variant);
        j["dims"] = spec.dims;
        j["mu_per_coordinate"] = spec.mu_per_coordinate;
        j["target_c"] = spec.target_c;
        if (spec.gamma) j["gamma"] = *spec.gamma;
        j["n"] = n;
        j["seed"] = seed;
        if (const auto* tq = std::get_if<purisk::TopQuantileLabeling>(&labeling)) {
            j["labeling"] = {{"mode", "top_quantile"},
                             {"fraction", tq->fraction},
                             {"score_weights", tq->score_weights}};
        } else {
            j["labeling"] = {{"mode", "probabilistic"}};
        }
        j["calibration"] = {{"mc_positives", calibration.mc_positives},
                            {"tol", calibration.tol},
                            {"seed", calibration.seed}};
        return j;
    }
};

GenConfig parse_gen_config(const json& j) {
    GenConfig c;
    c.spec.variant = purisk::variant_from_string(j.at("variant").get<std::string>());
    if (j.contains("dims")) c.spec.dims = j.at("dims").get<std::size_t>();
    if (j.contains("mu_per_coordinate")) {
        c.spec.mu_per_coordinate = j.at("mu_per_coordinate").get<double>();
    }
    c.spec.target_c = j.at("target_c").get<double>();
    if (j.contains("gamma")) c.spec.gamma = j.at("gamma").get<purisk::Vec>();
    c.n = j.at("n").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("labeling")) {
        const json& lbl = j.at("labeling");
        const std::string mode = lbl.at("mode").get<std::string>();
        if (mode == "probabilistic") {
            c.labeling = purisk::ProbabilisticLabeling{};
        } else if (mode == "top_quantile") {
            purisk::TopQuantileLabeling tq;
            tq.fraction = lbl.at("fraction").get<double>();
            tq.score_weights = lbl.at("score_weights").get<purisk::Vec>();
            c.labeling = tq;
        } else {
            throw std::runtime_error("labeling.mode must be probabilistic or top_quantile, got \"" +
                                     mode + "\"");
        }
    }
    if (j.contains("calibration")) {
        const json& cal = j.at("calibration");
        if (cal.contains("mc_positives")) {
            c.calibration.mc_positives = cal.at("mc_positives").get<std::size_t>();
        }
        if (cal.contains("tol")) c.calibration.tol = cal.at("tol").get<double>();
        if (cal.contains("seed")) c.calibration.seed = cal.at("seed").get<std::uint64_t>();
    }
    c.spec.validate();  // rejects target_c outside (0, 1], bad gamma, ...
    return c;
}

int cmd_gen(const std::string& config_path, const std::string& out) {
    const auto start = std::chrono::steady_clock::now();
    const GenConfig config = parse_gen_config(read_json_file(config_path));
    const purisk::Scenario scenario = purisk::build_scenario(config.spec, config.calibration);
    const purisk::PuDataset ds =
        purisk::sample_dataset(scenario, config.n, config.seed, config.labeling);

    OutputDir dir(resolve_out(out));
    ds.write_csv(dir.file("dataset.csv"));
    dir.note_file("dataset.csv");
    ds.write_meta_json(dir.file("dataset.json"));
    dir.note_file("dataset.json");
    dir.commit("gen", config.echo(), {config.seed}, elapsed_seconds(start));
    std::cout << "wrote " << resolve_out(out).string() << " (n=" << ds.size()
              << ", achieved_c=" << purisk::to_string_g17(ds.meta().achieved_c) << ")\n";
    return 0;
}

// ---------------------------------------------------------------------------
// risk
// ---------------------------------------------------------------------------

struct RiskInvocation {
    purisk::Scenario scenario = purisk::make_probit_scenario(0.0);
    bool is_probit = false;
    double probit_a = 0.0;
    json config_echo;
};

RiskInvocation parse_risk_scenario(const json& j) {
    RiskInvocation inv;
    inv.config_echo = j;
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "probit") {
        inv.is_probit = true;
        inv.probit_a = j.at("a").get<double>();
        inv.scenario = purisk::make_probit_scenario(inv.probit_a);
    } else if (kind == "constant") {
        const std::size_t dims = j.contains("dims") ? j.at("dims").get<std::size_t>() : 1;
        inv.scenario =
            purisk::make_constant_scenario(j.at("y").get<double>(), j.at("e").get<double>(), dims);
    } else if (kind == "variant") {
        purisk::VariantSpec spec;
        spec.variant = purisk::variant_from_string(j.at("variant").get<std::string>());
        if (j.contains("dims")) spec.dims = j.at("dims").get<std::size_t>();
        if (j.contains("mu_per_coordinate")) {
            spec.mu_per_coordinate = j.at("mu_per_coordinate").get<double>();
        }
        spec.target_c = j.at("target_c").get<double>();
        if (j.contains("gamma")) spec.gamma = j.at("gamma").get<purisk::Vec>();
        spec.validate();
        purisk::CalibrationParams calib;
        if (j.contains("calibration")) {
            const json& cal = j.at("calibration");
            if (cal.contains("mc_positives")) {
                calib.mc_positives = cal.at("mc_positives").get<std::size_t>();
            }
            if (cal.contains("tol")) calib.tol = cal.at("tol").get<double>();
            if (cal.contains("seed")) calib.seed = cal.at("seed").get<std::uint64_t>();
        }
        inv.scenario = purisk::build_scenario(spec, calib);
    } else {
        throw std::runtime_error("risk config: kind must be probit, constant or variant, got \"" +
                                 kind + "\"");
    }
    return inv;
}

json probit_report_json(const purisk::ProbitReport& r) {
    return json{{"a", r.a},           {"l_star", r.l_star}, {"l_star_pu", r.l_star_pu},
                {"excess", r.excess}, {"p_s1", r.p_s1},     {"p_s0", r.p_s0}};
}

int cmd_risk(const std::string& config_path, bool has_probit, double probit_a,
             std::uint64_t n_mc, std::uint64_t seed, unsigned parallelism,
             const std::string& out) {
    const auto start = std::chrono::steady_clock::now();
    RiskInvocation inv;
    if (has_probit) {
        inv.is_probit = true;
        inv.probit_a = probit_a;
        inv.scenario = purisk::make_probit_scenario(probit_a);
        inv.config_echo = json{{"kind", "probit"}, {"a", probit_a}};
    } else if (!config_path.empty()) {
        inv = parse_risk_scenario(read_json_file(config_path));
        if (n_mc == 0) n_mc = 1000000;  // scenario configs are Monte-Carlo runs
    } else {
        throw std::runtime_error("risk: pass --probit A or --config FILE");
    }

    json report;
    report["scenario"] = inv.scenario.fingerprint();
    if (inv.is_probit) {
        report["probit_closed_form"] = probit_report_json(purisk::probit_closed_form(inv.probit_a));
    }
    if (n_mc > 0) {
        report["mc"] = purisk::mc_bayes_risk(inv.scenario, n_mc, seed, parallelism).to_json();
    }

    json echo = inv.config_echo;
    echo["n_mc"] = n_mc;
    echo["seed"] = seed;
    echo["parallelism"] = parallelism;

    if (out.empty()) {
        std::cout << report.dump(2) << "\n";
    } else {
        OutputDir dir(resolve_out(out));
        dir.write_text("report.json", report.dump(2) + "\n");
        dir.commit("risk", echo, {seed}, elapsed_seconds(start));
        std::cout << "wrote " << resolve_out(out).string() << "\n";
    }
    return 0;
}

// ---------------------------------------------------------------------------
// experiment
// ---------------------------------------------------------------------------

int cmd_experiment(const std::string& config_path, const std::string& methods_csv,
                   bool print_table, const std::string& table_metric, unsigned parallelism,
                   const std::string& out) {
    const auto start = std::chrono::steady_clock::now();
    purisk::ExperimentConfig config;
    if (!config_path.empty()) {
        config = purisk::ExperimentConfig::from_json(read_json_file(config_path));
    }
    if (!methods_csv.empty()) {
        config.methods.clear();
        std::string token;
        std::istringstream stream(methods_csv);
        while (std::getline(stream, token, ',')) {
            if (!token.empty()) config.methods.push_back(purisk::method_from_string(token));
        }
    }
    config.validate();

    const purisk::ExperimentResult result = purisk::run_experiment(config, parallelism);

    if (print_table) {
        std::cout << result.to_table(table_metric);
    }
    if (!out.empty()) {
        OutputDir dir(resolve_out(out));
        dir.write_text("results.csv", result.to_csv());
        dir.write_text("summary.json", result.summary_json().dump(2) + "\n");
        dir.commit("experiment", result.config_echo, config.seeds, elapsed_seconds(start));
        std::cout << "wrote " << resolve_out(out).string() << "\n";
    }
    if (!result.all_ok()) {
        print_errors(result.errors());
        return 1;
    }
    return 0;
}

// ---------------------------------------------------------------------------
// rank
// ---------------------------------------------------------------------------

int cmd_rank(const std::string& dataset_path, std::string meta_path, const std::string& pair_path,
             std::size_t k, const std::string& out) {
    const auto start = std::chrono::steady_clock::now();
    if (meta_path.empty()) {
        fs::path p(dataset_path);
        p.replace_extension(".json");
        meta_path = p.string();
    }
    const purisk::PuDataset ds = purisk::PuDataset::read(dataset_path, meta_path);
    const purisk::LoadedPair loaded = purisk::pair_from_json(read_json_file(pair_path));
    const purisk::EstimatorPair pair = loaded.pair();

    // Score the unlabeled records (ids are row indices).  Independently
    // fitted components can give s_hat > y_hat; the score is defined for
    // s <= y, so s_hat is truncated to y_hat before scoring.
    std::vector<purisk::RankItem> items;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (ds.s(i) != 0) continue;
        purisk::RankItem item;
        item.id = i;
        item.y = pair.y_hat(ds.x(i));
        item.s = std::min(pair.s_hat(ds.x(i)), item.y);
        items.push_back(item);
    }
    const std::vector<std::uint64_t> top = purisk::rank_top_k(items, k);

    std::ostringstream csv;
    csv << "id,score\n";
    std::map<std::uint64_t, const purisk::RankItem*> by_id;
    for (const purisk::RankItem& it : items) by_id[it.id] = &it;
    for (std::uint64_t id : top) {
        const purisk::RankItem* it = by_id.at(id);
        csv << id << "," << purisk::to_string_g17(purisk::likely_positive_score(it->y, it->s))
            << "\n";
    }

    json echo = {{"dataset", dataset_path}, {"meta", meta_path}, {"pair", pair_path}, {"k", k}};
    if (out.empty()) {
        std::cout << csv.str();
    } else {
        OutputDir dir(resolve_out(out));
        dir.write_text("topk.csv", csv.str());
        dir.commit("rank", echo, {}, elapsed_seconds(start));
        std::cout << "wrote " << resolve_out(out).string() << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Decision and risk toolkit for positive-unlabeled prediction"};
    app.set_version_flag("--version", std::string(PURISK_VERSION));
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "Generate a synthetic PU dataset");
    std::string gen_config, gen_out;
    gen->add_option("--config", gen_config, "JSON config (variant, target_c, n, seed, ...)")
        ->required();
    gen->add_option("--out", gen_out,
                    "Output directory (dataset.csv, dataset.json, manifest.json)")
        ->required();

    // risk
    auto* risk = app.add_subcommand("risk", "Closed-form / Monte-Carlo risk report");
    std::string risk_config, risk_out;
    double risk_probit_a = 0.0;
    std::uint64_t risk_n_mc = 0, risk_seed = 0;
    unsigned risk_par = 1;
    auto* probit_opt = risk->add_option(
        "--probit", risk_probit_a, "Probit-family threshold a (closed form; add --n-mc to sample)");
    risk->add_option("--config", risk_config, "Scenario JSON (kind: probit|constant|variant)")
        ->excludes(probit_opt);
    risk->add_option("--n-mc", risk_n_mc,
                     "Monte-Carlo draws (>= 1000; default 1000000 for --config scenarios)");
    risk->add_option("--seed", risk_seed, "Monte-Carlo seed");
    risk->add_option("--parallelism", risk_par, "Worker threads (result is independent of this)");
    risk->add_option("--out", risk_out, "Output directory (report.json, manifest.json); "
                                        "prints to stdout when omitted");

    // experiment
    auto* exp = app.add_subcommand("experiment", "Method-comparison grid");
    std::string exp_config, exp_methods, exp_out, exp_metric = "u_accuracy";
    bool exp_table = false;
    unsigned exp_par = 1;
    exp->add_option("--config", exp_config, "Experiment JSON config (defaults when omitted)");
    exp->add_option("--methods", exp_methods,
                    "Comma-separated method filter (overrides the config list)");
    exp->add_flag("--table", exp_table, "Print a wide mean +- SE table to stdout");
    exp->add_option("--table-metric", exp_metric, "Metric for --table (default u_accuracy)");
    exp->add_option("--parallelism", exp_par, "Worker threads (result is independent of this)");
    exp->add_option("--out", exp_out,
                    "Output directory (results.csv, summary.json, manifest.json)");

    // rank
    auto* rank = app.add_subcommand("rank", "Rank unlabeled records by likely-positive score");
    std::string rank_dataset, rank_meta, rank_pair, rank_out;
    std::size_t rank_k = 0;
    rank->add_option("--dataset", rank_dataset, "Dataset CSV")->required();
    rank->add_option("--meta", rank_meta, "Metadata JSON (default: CSV path with .json)");
    rank->add_option("--pair", rank_pair, "Estimator-pair JSON (fitted y/s models)")->required();
    rank->add_option("--k", rank_k, "How many top records to emit")->required();
    rank->add_option("--out", rank_out,
                     "Output directory (topk.csv, manifest.json); prints to stdout when omitted");

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) return cmd_gen(gen_config, gen_out);
        if (risk->parsed()) {
            return cmd_risk(risk_config, probit_opt->count() > 0, risk_probit_a, risk_n_mc,
                            risk_seed, risk_par, risk_out);
        }
        if (exp->parsed()) {
            return cmd_experiment(exp_config, exp_methods, exp_table, exp_metric, exp_par, exp_out);
        }
        if (rank->parsed()) return cmd_rank(rank_dataset, rank_meta, rank_pair, rank_k, rank_out);
    } catch (const std::exception& e) {
        print_errors({e.what()});
        return 1;
    }
    return 0;
}
