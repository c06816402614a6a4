// Command-line front end: classify / solve / bellman / experiment / selftest.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "hob/control.hpp"
#include "hob/io.hpp"
#include "hob/problem_io.hpp"
#include "hob/structure.hpp"

using nlohmann::json;

namespace {

// Exit codes: 0 ok; 1 usage/parse/io; 2 classify:NotStrongM;
// 3 classify:Undecidable; 4 numeric failure; 5 policies exhausted.
int exit_code_for(const hob::Error& e) {
    switch (e.kind()) {
    case hob::ErrorKind::PoliciesExhausted:
        return 5;
    case hob::ErrorKind::SingularMatrix:
    case hob::ErrorKind::PositivityLost:
    case hob::ErrorKind::MaxItersExceeded:
    case hob::ErrorKind::NegativeRadicand:
    case hob::ErrorKind::NonPositiveDiagonal:
    case hob::ErrorKind::StructureViolation:
    case hob::ErrorKind::NegativeRhs:
    case hob::ErrorKind::SolveFailure:
        return 4;
    default:
        return 1;
    }
}

int output_precision() {
    if (const char* env = std::getenv("HOB_PRECISION")) {
        const int p = std::atoi(env);
        if (p >= 1 && p <= 17) return p;
    }
    return 17;
}

json classification_json(const hob::ClassificationReport& rep) {
    json j;
    j["order"] = rep.order;
    j["dim"] = rep.dim;
    j["is_z"] = rep.is_z;
    j["diag_nonneg"] = rep.diag_nonneg;
    j["is_wdd"] = rep.is_wdd;
    j["is_sdd"] = rep.is_sdd;
    json sdd = json::array();
    for (int r : rep.sdd_rows) sdd.push_back(r + 1);
    j["sdd_rows"] = std::move(sdd);
    j["row_slack"] = rep.row_slack;
    j["is_wcdd"] = rep.is_wcdd;
    if (rep.is_wcdd) {
        json w = json::object();
        for (const auto& [row, walk] : rep.wcdd_witness) {
            json path = json::array();
            for (int v : walk) path.push_back(v + 1);
            w[std::to_string(row + 1)] = std::move(path);
        }
        j["wcdd_witness"] = std::move(w);
    }
    j["is_weakly_irreducible"] = rep.is_weakly_irreducible;
    j["strong_m_decision"] = hob::strong_m_name(rep.strong_m);
    if (rep.zero_eigvec) j["zero_eigvec"] = *rep.zero_eigvec;
    return j;
}

json solve_json(const hob::SolveReport& rep, const char* method) {
    json j;
    j["method"] = method;
    j["iterations"] = rep.iterations;
    j["residual_inf"] = rep.residual_inf;
    j["nonnegative_mode"] = rep.nonnegative_mode;
    j["step_norms"] = rep.history;
    return j;
}

std::vector<int> parse_levels(const std::string& spec) {
    std::vector<int> levels;
    if (spec.find(':') != std::string::npos) {
        const auto pos = spec.find(':');
        const int lo = std::stoi(spec.substr(0, pos));
        const int hi = std::stoi(spec.substr(pos + 1));
        if (lo < 2 || hi < lo) throw hob::Error(hob::ErrorKind::InvalidArgument, "bad levels range");
        for (int m = lo; m <= hi; m *= 2) levels.push_back(m);
    } else {
        std::istringstream ss(spec);
        std::string tok;
        while (std::getline(ss, tok, ',')) levels.push_back(std::stoi(tok));
    }
    if (levels.empty()) throw hob::Error(hob::ErrorKind::InvalidArgument, "no levels given");
    return levels;
}

int run_selftest(unsigned seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.5, 2.0);
    int failures = 0;
    auto check = [&](bool ok, const char* what) {
        std::cout << (ok ? "pass" : "FAIL") << ": " << what << "\n";
        if (!ok) ++failures;
    };

    // contraction homogeneity on a random tensor
    {
        std::vector<hob::TensorEntry> es;
        std::uniform_int_distribution<int> idx(0, 3);
        for (int k = 0; k < 10; ++k)
            es.push_back({{idx(rng), idx(rng), idx(rng)}, unit(rng)});
        std::map<hob::IndexTuple, double> dedup;
        for (auto& e : es) dedup[e.idx] = e.value;
        es.clear();
        for (auto& [t, v] : dedup) es.push_back({t, v});
        hob::SparseTensor a(3, 4, es);
        hob::Vec x(4);
        for (auto& v : x) v = unit(rng);
        hob::Vec y1 = hob::contract(a, x);
        hob::Vec x2 = x;
        for (auto& v : x2) v *= 3.0;
        hob::Vec y2 = hob::contract(a, x2);
        double err = 0;
        for (int i = 0; i < 4; ++i) err = std::max(err, std::abs(y2[i] - 9.0 * y1[i]));
        check(err <= 1e-10 * (1.0 + hob::inf_norm(y2)), "contraction homogeneity");
    }

    // newton and fixed-point agree on a random s.d.d. M-tensor
    {
        const int n = 4;
        std::vector<hob::TensorEntry> es;
        std::uniform_int_distribution<int> idx(0, n - 1);
        std::uniform_int_distribution<int> numer(1, 255);
        std::vector<double> offsum(n, 0.0);
        std::map<hob::IndexTuple, double> acc;
        for (int k = 0; k < 12; ++k) {
            hob::IndexTuple t{idx(rng), idx(rng), idx(rng)};
            if (t[0] == t[1] && t[1] == t[2]) continue;
            acc[t] += -numer(rng) / 256.0;
        }
        for (auto& [t, v] : acc) {
            offsum[t[0]] += -v;
            es.push_back({t, v});
        }
        for (int i = 0; i < n; ++i)
            es.push_back({{i, i, i}, offsum[i] + numer(rng) / 64.0});
        hob::SparseTensor a(3, n, es);
        hob::Vec b(n);
        for (auto& v : b) v = unit(rng);
        auto newton = hob::solve_newton(a, b);
        hob::SolveOptions fp;
        fp.method = hob::SolveMethod::FixedPoint;
        auto fixed = hob::solve_fixed_point(a, b, fp);
        check(hob::inf_dist(newton.x, fixed.x) <= 1e-8, "newton/fixed-point agreement");
    }

    // tensor file round-trip
    {
        namespace fs = std::filesystem;
        const auto path = fs::temp_directory_path() / "hob_selftest_tensor.txt";
        auto a = hob::SparseTensor::identity(3, 5);
        hob::write_tensor(a, path.string());
        auto back = hob::read_tensor(path.string());
        check(back == a, "tensor file round-trip");
        fs::remove(path);
    }

    std::cout << (failures == 0 ? "selftest ok" : "selftest FAILED") << "\n";
    return failures == 0 ? 0 : 4;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"High-order Bellman equation toolkit: tensor classification, "
                 "positive solvers, policy iteration, control-problem experiments"};
    app.require_subcommand(1);
    const int precision = output_precision();

    // classify
    std::string cl_tensor, cl_out;
    double cl_eps = 0.0;
    auto* classify_cmd = app.add_subcommand("classify", "Structural classification of a tensor");
    classify_cmd->add_option("tensor", cl_tensor, "tensor file")->required();
    classify_cmd->add_option("--slack-eps", cl_eps, "dominance slack tolerance (default exact)");
    classify_cmd->add_option("--out", cl_out, "write the JSON report here as well");

    // solve
    std::string so_tensor, so_rhs, so_out = "solution.txt", so_report, so_method = "newton";
    hob::SolveOptions so_opts;
    bool so_verify = false;
    auto* solve_cmd = app.add_subcommand("solve", "Solve A x^{m-1} = b for positive x");
    solve_cmd->add_option("tensor", so_tensor, "tensor file")->required();
    solve_cmd->add_option("rhs", so_rhs, "right hand side vector file")->required();
    solve_cmd->add_option("--method", so_method, "newton | fixed-point")
        ->check(CLI::IsMember({"newton", "fixed-point"}));
    solve_cmd->add_option("--abs-tol", so_opts.abs_tol, "absolute step tolerance");
    solve_cmd->add_option("--rel-tol", so_opts.rel_tol, "relative step tolerance");
    solve_cmd->add_option("--max-iters", so_opts.max_iters, "iteration cap");
    solve_cmd->add_option("--damping-min", so_opts.damping_min, "positivity damping floor");
    solve_cmd->add_flag("--assume-strong-m", so_opts.assume_strong_m,
                        "skip the structural pre-check");
    solve_cmd->add_flag("--verify", so_verify, "cross-check newton against fixed-point");
    solve_cmd->add_option("--out", so_out, "solution vector file");
    solve_cmd->add_option("--report", so_report, "write a JSON report here");

    // bellman
    std::string be_file, be_out = "bellman_solution.txt", be_policy = "bellman_policy.txt",
                be_report;
    double be_outer_tol = -1.0;
    bool be_verbose = false;
    hob::SolveOptions be_opts;
    auto* bellman_cmd = app.add_subcommand("bellman", "Policy iteration on an explicit problem file");
    bellman_cmd->add_option("problem", be_file, "problem file")->required();
    bellman_cmd->add_option("--outer-tol", be_outer_tol, "Bellman residual tolerance");
    bellman_cmd->add_option("--abs-tol", be_opts.abs_tol, "inner absolute step tolerance");
    bellman_cmd->add_option("--rel-tol", be_opts.rel_tol, "inner relative step tolerance");
    bellman_cmd->add_option("--max-iters", be_opts.max_iters, "inner iteration cap");
    bellman_cmd->add_flag("-v,--verbose", be_verbose, "print a per-iteration trace");
    bellman_cmd->add_option("--out", be_out, "solution vector file");
    bellman_cmd->add_option("--policy-out", be_policy, "final policy file");
    bellman_cmd->add_option("--report", be_report, "write a JSON report here");

    // experiment
    std::string ex_scheme = "od", ex_out = ".", ex_coeffs, ex_levels = "32:1024";
    int ex_param = 1, ex_kratio = 32;
    double ex_gamma_max = 2.0;
    bool ex_regularize = false;
    auto* exp_cmd = app.add_subcommand("experiment", "Convergence study of the control schemes");
    exp_cmd->add_option("--scheme", ex_scheme, "od | do")
        ->check(CLI::IsMember({"od", "do"}));
    exp_cmd->add_option("--param", ex_param, "built-in parameterization (1 or 2)")
        ->check(CLI::Range(1, 2));
    exp_cmd->add_option("--coeffs", ex_coeffs, "custom piecewise-polynomial coefficient file");
    exp_cmd->add_option("--levels", ex_levels, "doubling range lo:hi or comma list");
    exp_cmd->add_option("--gamma-max", ex_gamma_max, "control cutoff for the DO scheme");
    exp_cmd->add_option("--k-ratio", ex_kratio, "DO gamma partition: K = M / k-ratio");
    exp_cmd->add_flag("--regularize", ex_regularize,
                      "add a diagonal shift omega(dx) = dx to interior rows");
    exp_cmd->add_option("--out", ex_out, "output directory");

    // selftest
    unsigned st_seed = 12345;
    auto* self_cmd = app.add_subcommand("selftest", "Quick randomized self-checks");
    self_cmd->add_option("--seed", st_seed, "random seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (classify_cmd->parsed()) {
            const auto a = hob::read_tensor(cl_tensor);
            const auto rep = hob::classify(a, cl_eps);
            const json j = classification_json(rep);
            std::cout << j.dump(2) << "\n";
            if (!cl_out.empty()) hob::detail::atomic_write(cl_out, j.dump(2) + "\n");
            if (rep.strong_m == hob::StrongM::NotStrongM) return 2;
            if (rep.strong_m == hob::StrongM::Undecidable) return 3;
            return 0;
        }

        if (solve_cmd->parsed()) {
            const auto a = hob::read_tensor(so_tensor);
            const auto b = hob::read_vec(so_rhs);
            so_opts.method = so_method == "newton" ? hob::SolveMethod::Newton
                                                   : hob::SolveMethod::FixedPoint;
            const auto rep = hob::solve(a, b, so_opts);
            if (so_verify) {
                hob::SolveOptions other = so_opts;
                other.method = so_opts.method == hob::SolveMethod::Newton
                                   ? hob::SolveMethod::FixedPoint
                                   : hob::SolveMethod::Newton;
                const auto cross = hob::solve(a, b, other);
                const double gap = hob::inf_dist(rep.x, cross.x);
                if (gap > 1e-8)
                    throw hob::Error(hob::ErrorKind::SolveFailure,
                                     "methods disagree by " + std::to_string(gap));
            }
            hob::write_vec(rep.x, so_out, precision);
            const json j = solve_json(rep, so_method.c_str());
            std::cout << j.dump(2) << "\n";
            if (!so_report.empty()) hob::detail::atomic_write(so_report, j.dump(2) + "\n");
            return 0;
        }

        if (bellman_cmd->parsed()) {
            const auto prob = hob::read_problem(be_file).to_policy_problem();
            std::optional<double> tol;
            if (be_outer_tol >= 0.0) tol = be_outer_tol;
            const auto rep = hob::policy_iteration(prob, be_opts, tol);
            if (be_verbose)
                for (std::size_t k = 0; k < rep.history.size(); ++k)
                    std::cout << "iter " << (k + 1) << ": inner=" << rep.history[k].inner_iterations
                              << " step=" << rep.history[k].step_inf
                              << " residual=" << rep.history[k].residual_inf << "\n";
            hob::write_vec(rep.u, be_out, precision);
            {
                std::ostringstream pol;
                pol << "policy " << prob.dim() << "\n";
                for (int i = 0; i < prob.dim(); ++i)
                    pol << prob.label_name(i, rep.final_policy[i]) << "\n";
                hob::detail::atomic_write(be_policy, pol.str());
            }
            json j;
            j["outer_iterations"] = rep.outer_iterations;
            j["inner_iterations"] = rep.inner_iteration_counts;
            j["residual_inf"] = rep.residual_inf;
            j["visited_policies"] = rep.visited_policy_count;
            std::cout << j.dump(2) << "\n";
            if (!be_report.empty()) hob::detail::atomic_write(be_report, j.dump(2) + "\n");
            return 0;
        }

        if (exp_cmd->parsed()) {
            hob::ModelCoefficients coeffs;
            if (!ex_coeffs.empty())
                coeffs = hob::read_coefficients(ex_coeffs);
            else
                coeffs = ex_param == 1 ? hob::parameterization_1() : hob::parameterization_2();
            coeffs.gamma_max = ex_gamma_max;

            hob::StudyOptions opts;
            opts.scheme = ex_scheme == "od" ? hob::Scheme::OD : hob::Scheme::DO;
            opts.levels = parse_levels(ex_levels);
            opts.k_ratio = ex_kratio;
            opts.regularize = ex_regularize;

            const auto study = hob::run_convergence_study(coeffs, opts);

            namespace fs = std::filesystem;
            fs::create_directories(ex_out);
            hob::write_table_csv(study.rows, (fs::path(ex_out) / "table.csv").string(),
                                 precision);
            for (std::size_t l = 0; l < study.rows.size(); ++l) {
                const hob::Grid g(study.rows[l].M);
                hob::emit_plots(study.solutions[l], g,
                                (fs::path(ex_out) /
                                 ("solution_M" + std::to_string(study.rows[l].M)))
                                    .string(),
                                precision);
            }
            std::cout << "M,K,value,rel_err,ratio,its,inner_its,time\n";
            for (const auto& r : study.rows) {
                std::cout << r.M << ',';
                if (r.K > 0) std::cout << r.K;
                std::cout << ',' << r.value << ',' << r.rel_err << ',';
                if (r.ratio) std::cout << *r.ratio;
                std::cout << ',' << r.outer_its << ',' << r.inner_its_avg << ','
                          << r.time_seconds << "\n";
            }
            return 0;
        }

        if (self_cmd->parsed()) return run_selftest(st_seed);
    } catch (const hob::Error& e) {
        std::cerr << "error kind=" << e.kind_name() << ": " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error kind=unknown: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
