// Command-line frontend: load or generate models, search for equilibria,
// verify candidates, inspect the individual control problem.
//
// Exit codes: 0 success, 1 verification failure, 2 malformed input.

#include "mfg/mfg.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitVerificationFailure = 1;
constexpr int kExitMalformed = 2;

std::string fmt(double v) {
    std::ostringstream os;
    os << std::setprecision(12) << v;
    return os.str();
}

std::string fmt(const mfg::Vector& v) {
    std::ostringstream os;
    os << "(";
    for (Eigen::Index i = 0; i < v.size(); ++i) os << (i ? ", " : "") << fmt(v[i]);
    os << ")";
    return os.str();
}

int resolve_threads(int flag_value) {
    if (const char* env = std::getenv("MFG_THREADS")) {
        try {
            return std::max(1, std::stoi(env));
        } catch (const std::exception&) {
            throw mfg::MalformedModel("environment variable MFG_THREADS is not an integer");
        }
    }
    return flag_value;
}

std::string support_string(const std::vector<std::vector<int>>& sets) {
    std::ostringstream os;
    for (std::size_t i = 0; i < sets.size(); ++i) {
        if (i) os << " x ";
        os << "{";
        for (std::size_t k = 0; k < sets[i].size(); ++k) os << (k ? "," : "") << sets[i][k] + 1;
        os << "}";
    }
    return os.str();
}

void print_certificate(const mfg::EquilibriumCertificate& cert) {
    std::cout << "  m = " << fmt(cert.m.probs()) << "  [" << mfg::to_string(cert.kind) << "]\n";
    for (int i = 0; i < cert.pi.num_states(); ++i) {
        std::cout << "    pi[" << i + 1 <<"] = (";
        for (int a = 0; a < cert.pi.num_actions(); ++a)
            std::cout << (a ? ", " : "") << fmt(cert.pi(i, a));
        std::cout << ")\n";
    }
    std::cout << "    stationarity residual " << fmt(cert.stationarity_residual)
              << ", optimality gap " << fmt(cert.optimality_gap) << "\n";
}

int run_solve(const std::string& model_path, std::string out_path, mfg::SearchConfig cfg) {
    if (cfg.grid != 0 && cfg.grid < 2)
        throw mfg::MalformedModel("--grid must be 0 (auto) or at least 2");
    mfg::ModelSpec model = mfg::load_model(model_path);
    mfg::ValidationReport validation = mfg::validate_model(model, 50);
    if (!validation.passed()) {
        std::cerr << "model failed validation; worst violation: " << validation.worst_location
                  << " (magnitude " << fmt(validation.worst) << ")\n";
        return kExitMalformed;
    }
    cfg.threads = resolve_threads(cfg.threads);
    mfg::SearchResult result = mfg::solve_all(model, cfg);
    if (out_path.empty())
        out_path = std::filesystem::path(model_path).replace_extension().string() +
                   ".equilibria.json";
    mfg::save_equilibria(result, out_path);

    std::cout << "found " << result.equilibria.size() << " equilibria\n";
    for (const auto& cert : result.equilibria) print_certificate(cert);
    if (!result.report.warnings.empty()) {
        std::cout << "warnings:\n";
        for (const auto& w : result.report.warnings) std::cout << "  " << w << "\n";
    }
    if (!result.report.nonconvergence.empty())
        std::cout << result.report.nonconvergence.size()
                  << " non-converged search attempts (see output file)\n";
    std::cout << "wrote " << out_path << "\n";
    return kExitOk;
}

int run_verify(const std::string& model_path, const std::string& eq_path, double tolerance,
               double tie_tol) {
    mfg::ModelSpec model = mfg::load_model(model_path);
    std::vector<mfg::EquilibriumRecord> records = mfg::load_equilibria(eq_path);
    bool all_ok = true;
    int index = 0;
    for (const auto& rec : records) {
        mfg::PopulationDistribution m(rec.m);
        mfg::StationaryStrategy pi(rec.pi);
        mfg::EquilibriumCertificate cert =
            mfg::verify_equilibrium(model, m, pi, tolerance, tie_tol);
        std::cout << "record " << ++index << ": m = " << fmt(cert.m.probs()) << " -> "
                  << (cert.passed() ? "PASS" : "FAIL");
        if (!cert.passed()) {
            std::cout << " (";
            if (!cert.stationarity_ok)
                std::cout << "stationarity residual " << fmt(cert.stationarity_residual) << "; ";
            if (!cert.optimality_ok)
                std::cout << "optimality gap " << fmt(cert.optimality_gap) << "; ";
            if (!cert.support_ok) std::cout << "support outside optimal actions";
            std::cout << ")";
            all_ok = false;
        }
        std::cout << "\n";
    }
    return all_ok ? kExitOk : kExitVerificationFailure;
}

int run_value(const std::string& model_path, const std::vector<double>& m_values,
              double tie_tol) {
    mfg::ModelSpec model = mfg::load_model(model_path);
    if (static_cast<int>(m_values.size()) != model.num_states())
        throw mfg::MalformedModel("--m needs exactly " + std::to_string(model.num_states()) +
                                  " entries");
    mfg::Vector mv = Eigen::Map<const mfg::Vector>(m_values.data(),
                                                   static_cast<Eigen::Index>(m_values.size()));
    mfg::PopulationDistribution m(mv);
    mfg::OptimalitySummary opt = mfg::optimal_action_sets(model, m, tie_tol);
    std::cout << "V* = " << fmt(opt.value) << "\n";
    for (std::size_t i = 0; i < opt.action_sets.size(); ++i) {
        std::cout << "O_" << i + 1 << " = {";
        for (std::size_t k = 0; k < opt.action_sets[i].size(); ++k)
            std::cout << (k ? "," : "") << opt.action_sets[i][k] + 1;
        std::cout << "}\n";
    }
    std::cout << "D(m) = " << support_string(opt.action_sets) << "  ("
              << opt.num_deterministic() << " deterministic strategies)\n";
    return kExitOk;
}

int run_validate(const std::string& model_path, int samples) {
    mfg::ModelSpec model = mfg::load_model(model_path);
    mfg::ValidationReport report = mfg::validate_model(model, samples);
    std::cout << "checked " << report.samples_checked << " simplex points\n";
    for (const auto& [state, action] : report.completed_diagonals)
        std::cout << "auto-completed diagonal: state " << state + 1 << ", action " << action + 1
                  << "\n";
    if (report.passed()) {
        std::cout << "model is well-formed (0 violations)\n";
        return kExitOk;
    }
    std::cout << report.violations.size() << " violations; worst: " << report.worst_location
              << " (magnitude " << fmt(report.worst) << ")\n";
    for (const auto& v : report.violations) std::cout << "  " << v.where << "\n";
    return kExitVerificationFailure;
}

int run_example(const std::string& which, std::string out_path, const mfg::ConsumerParams& cp,
                const mfg::CorruptionParams& kp) {
    if (out_path.empty()) out_path = which + ".json";
    if (which == "consumer") {
        mfg::ModelSpec model = mfg::consumer_model(cp);
        mfg::save_model(model, out_path);
        mfg::ConsumerReference ref = mfg::consumer_reference(cp);
        nlohmann::json j;
        j["d1"] = ref.d1;
        j["d2"] = ref.d2;
        static const char* roman[] = {"",   "i",  "ii",  "iii", "iv",
                                      "v",  "vi", "vii", "viii"};
        j["case"] = roman[ref.case_label];
        j["equilibria"] = nlohmann::json::array();
        for (const auto& eq : ref.equilibria) {
            nlohmann::json rec;
            rec["m"] = std::vector<double>(eq.m.data(), eq.m.data() + eq.m.size());
            nlohmann::json pi = nlohmann::json::array();
            for (Eigen::Index i = 0; i < eq.pi.rows(); ++i)
                pi.push_back(std::vector<double>{eq.pi(i, 0), eq.pi(i, 1)});
            rec["pi"] = std::move(pi);
            rec["kind"] = mfg::to_string(eq.kind);
            j["equilibria"].push_back(std::move(rec));
        }
        std::string ref_path =
            std::filesystem::path(out_path).replace_extension().string() + ".reference.json";
        std::ofstream ref_out(ref_path);
        ref_out << j.dump(2) << "\n";
        std::cout << "wrote " << out_path << " and " << ref_path << " (case " << roman[ref.case_label]
                  << ", " << ref.equilibria.size() << " equilibria)\n";
    } else {
        mfg::ModelSpec model = mfg::corruption_model(kp);
        mfg::save_model(model, out_path);
        mfg::CorruptionReference ref = mfg::corruption_reference(kp);
        std::cout << "wrote " << out_path << " (optimality threshold m_H = "
                  << fmt(ref.threshold) << ")\n";
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"stationary mean field equilibria of finite state and action games"};
    app.require_subcommand(1);

    mfg::SearchConfig cfg;
    std::string model_path, eq_path, out_path, example_which;
    std::vector<double> m_values;
    double verify_tol = 1e-7;
    int validate_samples = 100;
    mfg::ConsumerParams consumer;
    mfg::CorruptionParams corruption;

    CLI::App* solve = app.add_subcommand("solve", "search for all stationary equilibria");
    solve->add_option("model", model_path, "model file (JSON)")->required();
    solve->add_option("--out", out_path, "equilibrium output file");
    solve->add_option("--grid", cfg.grid, "simplex grid resolution (0 = auto)");
    solve->add_option("--multistart", cfg.multistart, "fixed-point seeds per strategy");
    solve->add_option("--damping", cfg.damping, "fixed-point damping in (0,1]")
        ->check(CLI::Range(1e-6, 1.0));
    solve->add_option("--tie-tol", cfg.tie_tol, "relative tie tolerance")->check(CLI::PositiveNumber);
    solve->add_option("--tol", cfg.tol, "residual target")->check(CLI::PositiveNumber);
    solve->add_option("--dedup-radius", cfg.dedup_radius, "duplicate-solution radius")
        ->check(CLI::PositiveNumber);
    solve->add_option("--threads", cfg.threads, "parallelism degree")->check(CLI::PositiveNumber);
    solve->add_option("--seed", cfg.seed, "random seed for multistart");

    CLI::App* verify = app.add_subcommand("verify", "re-certify equilibria from a file");
    verify->add_option("model", model_path, "model file (JSON)")->required();
    verify->add_option("equilibria", eq_path, "equilibrium file (JSON)")->required();
    verify->add_option("--tol", verify_tol, "verification tolerance")->check(CLI::PositiveNumber);
    verify->add_option("--tie-tol", cfg.tie_tol, "relative tie tolerance")
        ->check(CLI::PositiveNumber);

    CLI::App* value = app.add_subcommand("value", "optimal values and action sets at a point");
    value->add_option("model", model_path, "model file (JSON)")->required();
    value->add_option("--m", m_values, "population distribution, comma separated")
        ->required()
        ->delimiter(',');
    value->add_option("--tie-tol", cfg.tie_tol, "relative tie tolerance")
        ->check(CLI::PositiveNumber);

    CLI::App* example = app.add_subcommand("example", "write a built-in example model");
    example->add_option("which", example_which, "consumer or corruption")
        ->required()
        ->check(CLI::IsMember({"consumer", "corruption"}));
    example->add_option("--out", out_path, "model output file");
    CLI::Option* opt_b = example->add_option("--b", consumer.b, "switch rate b (both examples)");
    example->add_option("--epsilon", consumer.epsilon, "consumer drift rate");
    CLI::Option* opt_beta =
        example->add_option("--beta", consumer.beta, "discount factor (both examples)");
    example->add_option("--c", consumer.c, "consumer switching cost");
    example->add_option("--s1", consumer.s1, "consumer base utility, state 1");
    example->add_option("--s2", consumer.s2, "consumer base utility, state 2");
    example->add_option("--delta", consumer.delta, "log regularization width");
    example->add_option("--q-inf", corruption.q_inf, "corruption infection rate");
    example->add_option("--q-soc", corruption.q_soc, "corruption conviction rate");
    example->add_option("--r", corruption.r, "corruption recovery rate");

    CLI::App* validate = app.add_subcommand("validate", "check a model file for well-formedness");
    validate->add_option("model", model_path, "model file (JSON)")->required();
    validate->add_option("--samples", validate_samples, "number of simplex sample points")
        ->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitMalformed;
    }

    try {
        if (solve->parsed()) return run_solve(model_path, out_path, cfg);
        if (verify->parsed()) return run_verify(model_path, eq_path, verify_tol, cfg.tie_tol);
        if (value->parsed()) return run_value(model_path, m_values, cfg.tie_tol);
        if (example->parsed()) {
            if (opt_b->count() > 0) corruption.b = consumer.b;
            if (opt_beta->count() > 0) corruption.beta = consumer.beta;
            return run_example(example_which, out_path, consumer, corruption);
        }
        if (validate->parsed()) return run_validate(model_path, validate_samples);
    } catch (const mfg::MalformedModel& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitMalformed;
    } catch (const mfg::InvalidParams& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitMalformed;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitMalformed;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitVerificationFailure;
    }
    return kExitOk;
}
