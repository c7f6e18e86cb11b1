#include "drfl/config.hpp"

#include "drfl/model.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace drfl {

using nlohmann::json;

GridConfig default_grid() {
    GridConfig g;
    g.rho = {1e-6, 2e-6, 5e-6, 1e-5, 2e-5, 1e-4, 2e-4, 5e-4, 1e-3, 2e-3, 1e-2, 2e-2, 5e-2, 5e-1, 1.0};
    g.kappa = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    g.theta = {1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0};
    return g;
}

namespace {

Vec to_vec(const json& j) {
    Vec v(j.size());
    int i = 0;
    for (const auto& x : j) v[i++] = x.get<double>();
    return v;
}

json from_vec(const Vec& v) {
    json j = json::array();
    for (int i = 0; i < v.size(); ++i) j.push_back(v[i]);
    return j;
}

Mat to_mat(const json& j) {
    const int rows = static_cast<int>(j.size());
    if (rows == 0) return Mat(0, 0);
    const int cols = static_cast<int>(j.at(0).size());
    Mat m(rows, cols);
    for (int r = 0; r < rows; ++r) {
        const json& row = j.at(r);
        if (static_cast<int>(row.size()) != cols)
            throw std::invalid_argument("config: ragged matrix in support.C");
        for (int c = 0; c < cols; ++c) m(r, c) = row.at(c).get<double>();
    }
    return m;
}

json from_mat(const Mat& m) {
    json j = json::array();
    for (int r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (int c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        j.push_back(row);
    }
    return j;
}

NoiseSchedule::Mode noise_mode_from_string(const std::string& s) {
    if (s == "fixed_sd_vary_mean") return NoiseSchedule::Mode::fixed_sd_vary_mean;
    if (s == "fixed_mean_vary_sd") return NoiseSchedule::Mode::fixed_mean_vary_sd;
    if (s == "ratio") return NoiseSchedule::Mode::ratio;
    throw std::invalid_argument("unknown noise mode: " + s);
}

std::string to_string(NoiseSchedule::Mode m) {
    switch (m) {
        case NoiseSchedule::Mode::fixed_sd_vary_mean: return "fixed_sd_vary_mean";
        case NoiseSchedule::Mode::fixed_mean_vary_sd: return "fixed_mean_vary_sd";
        case NoiseSchedule::Mode::ratio: return "ratio";
    }
    return "?";
}

}  // namespace

FullConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config: ") + e.what());
    }
    FullConfig cfg;

    const json& p = j.at("problem");
    cfg.problem.loss.family = loss_family_from_string(p.at("loss").get<std::string>());
    if (p.contains("epsilon")) cfg.problem.loss.epsilon = p.at("epsilon").get<double>();
    if (p.contains("support")) {
        const json& sup = p.at("support");
        cfg.problem.support.kind = support_kind_from_string(sup.value("kind", std::string("unbounded")));
        if (sup.contains("C")) cfg.problem.support.C = to_mat(sup.at("C"));
        if (sup.contains("c2")) cfg.problem.support.c2 = to_vec(sup.at("c2"));
        if (sup.contains("d")) cfg.problem.support.d = to_vec(sup.at("d"));
    }
    const json& rb = p.at("robustness");
    cfg.problem.robustness.rho = to_vec(rb.at("rho"));
    cfg.problem.robustness.kappa = rb.value("kappa", 1.0);
    cfg.problem.robustness.metric_norm = norm_kind_from_string(rb.value("metric_norm", std::string("l1")));
    const json& wt = p.at("weights");
    cfg.problem.weights.q_hat_mode = q_hat_mode_from_string(wt.value("q_hat", std::string("uniform")));
    if (cfg.problem.weights.q_hat_mode == QHatMode::explicit_vector)
        cfg.problem.weights.q_hat = to_vec(wt.at("q_hat_values"));
    cfg.problem.weights.theta = wt.value("theta", 0.1);
    cfg.problem.weights.p = norm_kind_from_string(wt.value("p", std::string("l1")));

    if (j.contains("solver")) {
        const json& s = j.at("solver");
        cfg.solver.stepsize = s.value("stepsize", 1.0);
        cfg.solver.max_iters = s.value("max_iters", 10000);
        cfg.solver.tol_primal = s.value("tol_primal", 1e-5);
        cfg.solver.tol_dual = s.value("tol_dual", 1e-5);
        if (s.contains("minibatch_size")) cfg.solver.minibatch_size = s.at("minibatch_size").get<int>();
        cfg.solver.seed = s.value("seed", std::uint64_t{1});
        cfg.solver.threads = s.value("threads", 1);
        cfg.solver.keep_message_log = s.value("keep_message_log", false);
        if (s.contains("trace_path")) cfg.solver.trace_path = s.at("trace_path").get<std::string>();
    }

    if (j.contains("data")) {
        const json& d = j.at("data");
        cfg.data.path = d.value("path", std::string());
        cfg.data.format = d.value("format", std::string("csv"));
        cfg.data.label_column = d.value("label_column", -1);
        cfg.data.scale = d.value("scale", std::string("none"));
        cfg.data.train_frac = d.value("train_frac", 0.6);
        cfg.data.clients = d.value("clients", 3);
        cfg.data.partition = d.value("partition", std::string("balanced"));
        if (d.contains("minority_ratios"))
            cfg.data.minority_ratios = d.at("minority_ratios").get<std::vector<double>>();
        cfg.data.seed = d.value("seed", std::uint64_t{1});
        cfg.data.train_noise_mean = d.value("train_noise_mean", 0.0);
        cfg.data.train_noise_sd = d.value("train_noise_sd", 0.0);
        cfg.data.train_noise_client = d.value("train_noise_client", 1);
    }

    if (j.contains("experiment")) {
        const json& e = j.at("experiment");
        if (e.contains("grid")) {
            const json& g = e.at("grid");
            if (g.contains("rho")) cfg.experiment.grid.rho = g.at("rho").get<std::vector<double>>();
            if (g.contains("kappa")) cfg.experiment.grid.kappa = g.at("kappa").get<std::vector<double>>();
            if (g.contains("theta")) cfg.experiment.grid.theta = g.at("theta").get<std::vector<double>>();
        }
        cfg.experiment.folds = e.value("folds", 5);
        if (e.contains("noise")) {
            const json& nz = e.at("noise");
            cfg.experiment.noise.mode = noise_mode_from_string(nz.value("mode", std::string("fixed_sd_vary_mean")));
            cfg.experiment.noise.fixed = nz.value("fixed", 0.0);
            if (nz.contains("grid")) cfg.experiment.noise.grid = nz.at("grid").get<std::vector<double>>();
            cfg.experiment.noise.ratio = nz.value("ratio", 1.0);
            cfg.experiment.noise.target = nz.value("target", std::string("test"));
            cfg.experiment.noise.target_client = nz.value("target_client", 1);
            cfg.experiment.noise.seed = nz.value("seed", std::uint64_t{1});
        }
        if (e.contains("methods")) cfg.experiment.methods = e.at("methods").get<std::vector<std::string>>();
        cfg.experiment.out_dir = e.value("out_dir", std::string("out"));
    }
    return cfg;
}

FullConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string serialize_config(const FullConfig& cfg) {
    json p;
    p["loss"] = to_string(cfg.problem.loss.family);
    if (cfg.problem.loss.epsilon) p["epsilon"] = *cfg.problem.loss.epsilon;
    json sup;
    sup["kind"] = to_string(cfg.problem.support.kind);
    if (cfg.problem.support.C.size()) sup["C"] = from_mat(cfg.problem.support.C);
    if (cfg.problem.support.c2.size()) sup["c2"] = from_vec(cfg.problem.support.c2);
    if (cfg.problem.support.d.size()) sup["d"] = from_vec(cfg.problem.support.d);
    p["support"] = sup;
    p["robustness"] = {{"rho", from_vec(cfg.problem.robustness.rho)},
                       {"kappa", cfg.problem.robustness.kappa},
                       {"metric_norm", to_string(cfg.problem.robustness.metric_norm)}};
    json wt;
    wt["q_hat"] = to_string(cfg.problem.weights.q_hat_mode);
    if (cfg.problem.weights.q_hat_mode == QHatMode::explicit_vector)
        wt["q_hat_values"] = from_vec(cfg.problem.weights.q_hat);
    wt["theta"] = cfg.problem.weights.theta;
    wt["p"] = to_string(cfg.problem.weights.p);
    p["weights"] = wt;

    json s;
    s["stepsize"] = cfg.solver.stepsize;
    s["max_iters"] = cfg.solver.max_iters;
    s["tol_primal"] = cfg.solver.tol_primal;
    s["tol_dual"] = cfg.solver.tol_dual;
    if (cfg.solver.minibatch_size) s["minibatch_size"] = *cfg.solver.minibatch_size;
    s["seed"] = cfg.solver.seed;
    s["threads"] = cfg.solver.threads;
    s["keep_message_log"] = cfg.solver.keep_message_log;
    if (!cfg.solver.trace_path.empty()) s["trace_path"] = cfg.solver.trace_path;

    json d;
    d["path"] = cfg.data.path;
    d["format"] = cfg.data.format;
    d["label_column"] = cfg.data.label_column;
    d["scale"] = cfg.data.scale;
    d["train_frac"] = cfg.data.train_frac;
    d["clients"] = cfg.data.clients;
    d["partition"] = cfg.data.partition;
    if (!cfg.data.minority_ratios.empty()) d["minority_ratios"] = cfg.data.minority_ratios;
    d["seed"] = cfg.data.seed;
    d["train_noise_mean"] = cfg.data.train_noise_mean;
    d["train_noise_sd"] = cfg.data.train_noise_sd;
    d["train_noise_client"] = cfg.data.train_noise_client;

    json e;
    e["grid"] = {{"rho", cfg.experiment.grid.rho},
                 {"kappa", cfg.experiment.grid.kappa},
                 {"theta", cfg.experiment.grid.theta}};
    e["folds"] = cfg.experiment.folds;
    e["noise"] = {{"mode", to_string(cfg.experiment.noise.mode)},
                  {"fixed", cfg.experiment.noise.fixed},
                  {"grid", cfg.experiment.noise.grid},
                  {"ratio", cfg.experiment.noise.ratio},
                  {"target", cfg.experiment.noise.target},
                  {"target_client", cfg.experiment.noise.target_client},
                  {"seed", cfg.experiment.noise.seed}};
    e["methods"] = cfg.experiment.methods;
    e["out_dir"] = cfg.experiment.out_dir;

    json j;
    j["problem"] = p;
    j["solver"] = s;
    j["data"] = d;
    j["experiment"] = e;
    return j.dump(2) + "\n";
}

void save_config(const FullConfig& cfg, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("config: cannot write " + path);
    out << serialize_config(cfg);
}

}  // namespace drfl
