#pragma once

#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hob/bellman.hpp"
#include "hob/io.hpp"

namespace hob {

/// Coefficients of the control problem
///   -max_{gamma, lambda} { (1/2) sigma^2 u'' + mu u' - eta u
///                          - (1/2) alpha gamma^2 u + beta gamma } = 0
/// on (0,1) with u = g on the boundary. sigma and mu may depend on the
/// finite control lambda; gamma ranges over [0, inf) and is handled by the
/// scheme.
struct ModelCoefficients {
    std::function<double(double, double)> sigma; // (x, lambda)
    std::function<double(double, double)> mu;    // (x, lambda)
    std::function<double(double)> alpha;
    std::function<double(double)> beta;
    std::function<double(double)> eta;
    std::function<double(double)> g;
    std::vector<double> lambda_values;
    double gamma_max = 2.0; // DO scheme control cutoff
};

/// sigma = 0.2, mu = 0.04 lambda, alpha = 2 - x, beta = 1 + x, eta = 0.04,
/// g = 1, lambda in {-1, 1}. Every assembled tensor is strictly diagonally
/// dominant.
inline ModelCoefficients parameterization_1() {
    ModelCoefficients c;
    c.sigma = [](double, double) { return 0.2; };
    c.mu = [](double, double l) { return 0.04 * l; };
    c.alpha = [](double x) { return 2.0 - x; };
    c.beta = [](double x) { return 1.0 + x; };
    c.eta = [](double) { return 0.04; };
    c.g = [](double) { return 1.0; };
    c.lambda_values = {-1.0, 1.0};
    return c;
}

/// sigma = 0.3 (1 - lambda), mu = 0.04 lambda, alpha = beta = g = 1,
/// eta = 1_{x <= 0.5}, lambda in {0, 1}. The reaction term vanishes on
/// half the domain, so the assembled tensors are only weakly chained
/// diagonally dominant.
inline ModelCoefficients parameterization_2() {
    ModelCoefficients c;
    c.sigma = [](double, double l) { return 0.3 * (1.0 - l); };
    c.mu = [](double, double l) { return 0.04 * l; };
    c.alpha = [](double) { return 1.0; };
    c.beta = [](double) { return 1.0; };
    c.eta = [](double x) { return x <= 0.5 ? 1.0 : 0.0; };
    c.g = [](double) { return 1.0; };
    c.lambda_values = {0.0, 1.0};
    return c;
}

/// Uniform grid x_i = i/M, i = 0..M. M is kept even so the midpoint
/// x = 1/2 is a node.
struct Grid {
    int M = 2;
    double dx = 0.5;

    explicit Grid(int m) : M(m), dx(1.0 / m) {
        if (m < 2 || m % 2 != 0)
            throw Error(ErrorKind::InvalidArgument, "grid size must be even and >= 2");
    }
    double node(int i) const { return i * dx; }
    int midpoint_index() const { return M / 2; }
    int rows() const { return M + 1; }
};

/// Upwind stencil of (1/2) sigma^2 u'' + mu u' at interior node i:
/// coefficients on (u_{i-1}, u_i, u_{i+1}) with the first difference
/// one-sided by the sign of the drift.
struct UpwindStencil {
    double lower = 0.0;
    double center = 0.0;
    double upper = 0.0;
};

inline UpwindStencil upwind_row(const ModelCoefficients& c, const Grid& g, int i,
                                double lambda) {
    if (i <= 0 || i >= g.M)
        throw Error(ErrorKind::IndexOutOfRange, "upwind stencil is defined at interior nodes");
    const double x = g.node(i);
    const double s = c.sigma(x, lambda);
    const double mu = c.mu(x, lambda);
    const double diff = 0.5 * s * s / (g.dx * g.dx);
    UpwindStencil st;
    st.lower = diff;
    st.upper = diff;
    if (mu >= 0.0) {
        st.upper += mu / g.dx;
    } else {
        st.lower += -mu / g.dx;
    }
    st.center = -(st.lower + st.upper);
    return st;
}

/// Order-3 problem of the optimize-then-discretize scheme. Interior row i
/// under control lambda carries the five nonzeros
///   a_{i,i-1,i} = a_{i,i,i-1} = -lower/2,
///   a_{i,i,i}   = lower + upper + eta_i,
///   a_{i,i,i+1} = a_{i,i+1,i} = -upper/2,
/// with rhs (1/2) beta_i^2 / alpha_i; boundary rows are identity rows with
/// rhs g_i^2. The diagonal is assembled as (lower + upper) + eta_i so the
/// dominance slack cancels exactly when eta_i = 0.
inline PolicyProblem assemble_od(const ModelCoefficients& c, const Grid& g,
                                 double regularize_omega = 0.0) {
    const int n = g.rows();
    const int nl = static_cast<int>(c.lambda_values.size());
    if (nl < 1)
        throw Error(ErrorKind::InvalidArgument, "at least one control value required");

    std::vector<int> counts(n, nl);
    counts.front() = counts.back() = 1;

    std::vector<std::vector<std::string>> names(n);
    for (int i = 1; i < n - 1; ++i)
        for (double l : c.lambda_values)
            names[i].push_back("lambda=" + std::to_string(l));
    names.front().push_back("boundary");
    names.back().push_back("boundary");

    auto gen = [c, g, regularize_omega](int i, int label) -> PolicyRow {
        PolicyRow row;
        if (i == 0 || i == g.M) {
            row.entries.push_back({{i, i, i}, 1.0});
            const double gb = c.g(g.node(i));
            row.rhs = gb * gb;
            return row;
        }
        const double lambda = c.lambda_values[label];
        const UpwindStencil st = upwind_row(c, g, i, lambda);
        const double x = g.node(i);
        const double diag = (st.lower + st.upper) + c.eta(x) + regularize_omega;
        if (st.lower != 0.0) {
            row.entries.push_back({{i, i - 1, i}, -st.lower / 2.0});
            row.entries.push_back({{i, i, i - 1}, -st.lower / 2.0});
        }
        if (diag != 0.0) row.entries.push_back({{i, i, i}, diag});
        if (st.upper != 0.0) {
            row.entries.push_back({{i, i, i + 1}, -st.upper / 2.0});
            row.entries.push_back({{i, i + 1, i}, -st.upper / 2.0});
        }
        const double beta = c.beta(x);
        row.rhs = 0.5 * beta * beta / c.alpha(x);
        return row;
    };
    return PolicyProblem(3, n, std::move(counts), gen, std::move(names));
}

/// Order-2 problem of the discretize-then-optimize scheme: gamma is
/// discretized by the uniform partition of [0, gamma_max] with K pieces,
/// so each interior row has (K+1) * |Lambda| policies. Interior row under
/// (gamma, lambda):
///   a_{i,i-1} = -lower, a_{i,i} = lower + upper + eta_i + alpha_i gamma^2 / 2,
///   a_{i,i+1} = -upper, rhs = beta_i gamma;
/// boundary rows are identity rows with rhs g_i.
inline PolicyProblem assemble_do(const ModelCoefficients& c, const Grid& g, int k_pieces,
                                 double regularize_omega = 0.0) {
    if (k_pieces < 1)
        throw Error(ErrorKind::InvalidArgument, "gamma partition needs at least one piece");
    const int n = g.rows();
    const int nl = static_cast<int>(c.lambda_values.size());
    if (nl < 1)
        throw Error(ErrorKind::InvalidArgument, "at least one control value required");

    std::vector<double> gammas(k_pieces + 1);
    for (int j = 0; j <= k_pieces; ++j)
        gammas[j] = c.gamma_max * j / k_pieces;

    std::vector<int> counts(n, (k_pieces + 1) * nl);
    counts.front() = counts.back() = 1;

    std::vector<std::vector<std::string>> names(n);
    for (int i = 1; i < n - 1; ++i)
        for (int j = 0; j <= k_pieces; ++j)
            for (double l : c.lambda_values)
                names[i].push_back("gamma=" + std::to_string(gammas[j]) +
                                   ",lambda=" + std::to_string(l));
    names.front().push_back("boundary");
    names.back().push_back("boundary");

    auto gen = [c, g, gammas, nl, regularize_omega](int i, int label) -> PolicyRow {
        PolicyRow row;
        if (i == 0 || i == g.M) {
            row.entries.push_back({{i, i}, 1.0});
            row.rhs = c.g(g.node(i));
            return row;
        }
        const double gamma = gammas[label / nl];
        const double lambda = c.lambda_values[label % nl];
        const UpwindStencil st = upwind_row(c, g, i, lambda);
        const double x = g.node(i);
        const double diag =
            (st.lower + st.upper) + (c.eta(x) + 0.5 * c.alpha(x) * gamma * gamma) +
            regularize_omega;
        if (st.lower != 0.0) row.entries.push_back({{i, i - 1}, -st.lower});
        if (diag != 0.0) row.entries.push_back({{i, i}, diag});
        if (st.upper != 0.0) row.entries.push_back({{i, i + 1}, -st.upper});
        row.rhs = c.beta(x) * gamma;
        return row;
    };
    return PolicyProblem(2, n, std::move(counts), gen, std::move(names));
}

enum class Scheme { OD, DO };

struct SchemeSolution {
    Vec u;
    Vec gamma;  // OD: beta/(alpha u) everywhere; DO: chosen node, NaN at boundary
    Vec lambda; // chosen control value, NaN at boundary
    BellmanReport report;
};

/// Runs policy iteration on an assembled scheme and recovers the controls.
/// For the OD scheme the gamma control is the closed-form maximizer
/// beta / (alpha u) evaluated at the computed solution.
inline SchemeSolution solve_scheme(const PolicyProblem& problem, const ModelCoefficients& c,
                                   const Grid& g, Scheme scheme, SolveOptions solve_opts = {},
                                   std::optional<double> outer_tol = std::nullopt) {
    SchemeSolution sol;
    sol.report = policy_iteration(problem, solve_opts, outer_tol);
    sol.u = sol.report.u;
    const int n = g.rows();
    const double nan = std::numeric_limits<double>::quiet_NaN();
    sol.gamma.assign(n, nan);
    sol.lambda.assign(n, nan);
    const int nl = static_cast<int>(c.lambda_values.size());
    for (int i = 0; i < n; ++i) {
        const bool interior = i > 0 && i < g.M;
        const double x = g.node(i);
        if (scheme == Scheme::OD) {
            sol.gamma[i] = c.beta(x) / (c.alpha(x) * sol.u[i]);
            if (interior) sol.lambda[i] = c.lambda_values[sol.report.final_policy[i]];
        } else if (interior) {
            const int label = sol.report.final_policy[i];
            sol.gamma[i] = c.gamma_max * (label / nl) /
                           (problem.policy_count(i) / nl - 1);
            sol.lambda[i] = c.lambda_values[label % nl];
        }
    }
    return sol;
}

/// A priori sup-norm bound max_x max( sqrt(beta^2 / (2 alpha eta)), g ),
/// maximized over 10^4 uniform samples of [0, 1]. Infinite when eta
/// vanishes somewhere.
inline double stability_bound(const ModelCoefficients& c, int samples = 10000) {
    double best = 0.0;
    for (int j = 0; j < samples; ++j) {
        const double x = static_cast<double>(j) / (samples - 1);
        const double eta = c.eta(x);
        if (eta <= 0.0) return std::numeric_limits<double>::infinity();
        const double beta = c.beta(x);
        const double v = std::sqrt(0.5 * beta * beta / (c.alpha(x) * eta));
        best = std::max(best, std::max(v, c.g(x)));
    }
    return best;
}

struct ExperimentRow {
    int M = 0;
    int K = 0; // 0 when not applicable
    double value = 0.0;
    double rel_err = 0.0;
    std::optional<double> ratio;
    int outer_its = 0;
    double inner_its_avg = 0.0;
    double time_seconds = 0.0;
};

struct StudyOptions {
    Scheme scheme = Scheme::OD;
    std::vector<int> levels; // doubling sequence of M
    int k_ratio = 32;        // DO: K = max(1, M / k_ratio)
    bool regularize = false; // adds omega(dx) = dx to interior diagonals
    SolveOptions solve;
    std::optional<double> outer_tol;
};

struct StudyResult {
    std::vector<ExperimentRow> rows;
    int reference_m = 0;
    double reference_value = 0.0;
    double stability = 0.0;
    std::vector<SchemeSolution> solutions; // per level
};

/// Runs one refinement study. The midpoint value of each level is compared
/// against a reference computed once with the plain OD scheme at twice the
/// finest level; the ratio column compares consecutive midpoint
/// differences. Solutions are checked against the stability bound whenever
/// it is finite.
inline StudyResult run_convergence_study(const ModelCoefficients& c, const StudyOptions& o) {
    if (o.levels.empty())
        throw Error(ErrorKind::InvalidArgument, "at least one refinement level required");
    for (std::size_t l = 1; l < o.levels.size(); ++l)
        if (o.levels[l] != 2 * o.levels[l - 1])
            throw Error(ErrorKind::InvalidArgument, "levels must double");

    StudyResult out;
    out.stability = stability_bound(c);

    out.reference_m = 2 * o.levels.back();
    {
        const Grid g(out.reference_m);
        const PolicyProblem ref = assemble_od(c, g);
        const SchemeSolution sol = solve_scheme(ref, c, g, Scheme::OD, o.solve, o.outer_tol);
        out.reference_value = sol.u[g.midpoint_index()];
    }

    for (int m : o.levels) {
        const Grid g(m);
        const double omega = o.regularize ? g.dx : 0.0;
        ExperimentRow row;
        row.M = m;

        const auto t0 = std::chrono::steady_clock::now();
        PolicyProblem problem =
            o.scheme == Scheme::OD
                ? assemble_od(c, g, omega)
                : assemble_do(c, g, std::max(1, m / o.k_ratio), omega);
        if (o.scheme == Scheme::DO) row.K = std::max(1, m / o.k_ratio);
        SchemeSolution sol = solve_scheme(problem, c, g, o.scheme, o.solve, o.outer_tol);
        const auto t1 = std::chrono::steady_clock::now();

        row.time_seconds = std::chrono::duration<double>(t1 - t0).count();
        row.value = sol.u[g.midpoint_index()];
        row.rel_err = std::abs((row.value - out.reference_value) / out.reference_value);
        row.outer_its = sol.report.outer_iterations;
        double total = 0.0;
        for (int it : sol.report.inner_iteration_counts) total += it;
        row.inner_its_avg = total / sol.report.inner_iteration_counts.size();

        if (std::isfinite(out.stability))
            for (double v : sol.u)
                if (v > out.stability + 1e-8)
                    throw Error(ErrorKind::SolveFailure,
                                "computed solution exceeds the stability bound");

        out.rows.push_back(row);
        out.solutions.push_back(std::move(sol));
    }

    for (std::size_t l = 2; l < out.rows.size(); ++l)
        out.rows[l].ratio = (out.rows[l - 1].value - out.rows[l - 2].value) /
                            (out.rows[l].value - out.rows[l - 1].value);
    return out;
}

/// table.csv with columns M,K,value,rel_err,ratio,its,inner_its,time.
inline void write_table_csv(const std::vector<ExperimentRow>& rows, const std::string& path,
                            int precision = 17) {
    std::ostringstream out;
    out << "M,K,value,rel_err,ratio,its,inner_its,time\n";
    for (const auto& r : rows) {
        out << r.M << ',';
        if (r.K > 0) out << r.K;
        out << ',' << detail::format_double(r.value, precision) << ','
            << detail::format_double(r.rel_err, precision) << ',';
        if (r.ratio) out << detail::format_double(*r.ratio, precision);
        out << ',' << r.outer_its << ','
            << detail::format_double(r.inner_its_avg, precision) << ','
            << detail::format_double(r.time_seconds, 6) << '\n';
    }
    detail::atomic_write(path, out.str());
}

namespace detail {

inline void svg_panel(std::ostringstream& out, const Grid& g, const Vec& y,
                      const std::string& label, int top, int width, int height) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (double v : y)
        if (std::isfinite(v)) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    if (!std::isfinite(lo)) {
        lo = 0.0;
        hi = 1.0;
    }
    if (hi - lo < 1e-12) {
        hi += 0.5;
        lo -= 0.5;
    }
    const int left = 60, right = width - 20;
    const int bottom = top + height - 25;
    const int ptop = top + 20;
    out << "<rect x='" << left << "' y='" << ptop << "' width='" << (right - left)
        << "' height='" << (bottom - ptop) << "' fill='none' stroke='black'/>\n";
    out << "<text x='" << left << "' y='" << (top + 14) << "' font-size='12'>" << label
        << "</text>\n";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4g", hi);
    out << "<text x='4' y='" << (ptop + 10) << "' font-size='10'>" << buf << "</text>\n";
    std::snprintf(buf, sizeof(buf), "%.4g", lo);
    out << "<text x='4' y='" << bottom << "' font-size='10'>" << buf << "</text>\n";
    out << "<polyline fill='none' stroke='steelblue' stroke-width='1.5' points='";
    for (int i = 0; i <= g.M; ++i) {
        if (!std::isfinite(y[i])) continue;
        const double px = left + (right - left) * g.node(i);
        const double py = bottom - (bottom - ptop) * (y[i] - lo) / (hi - lo);
        out << px << ',' << py << ' ';
    }
    out << "'/>\n";
}

} // namespace detail

/// Writes <base>.csv (columns x,u,gamma,lambda; one row per node) and a
/// three-panel <base>.svg of the solution and controls.
inline void emit_plots(const SchemeSolution& sol, const Grid& g, const std::string& base,
                       int precision = 17) {
    std::ostringstream csv;
    csv << "x,u,gamma,lambda\n";
    for (int i = 0; i <= g.M; ++i)
        csv << detail::format_double(g.node(i), precision) << ','
            << detail::format_double(sol.u[i], precision) << ','
            << detail::format_double(sol.gamma[i], precision) << ','
            << detail::format_double(sol.lambda[i], precision) << '\n';
    detail::atomic_write(base + ".csv", csv.str());

    const int width = 640, panel = 220;
    std::ostringstream svg;
    svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='"
        << (3 * panel + 20) << "'>\n";
    detail::svg_panel(svg, g, sol.u, "u(x)", 10, width, panel);
    detail::svg_panel(svg, g, sol.gamma, "gamma(x)", 10 + panel, width, panel);
    detail::svg_panel(svg, g, sol.lambda, "lambda(x)", 10 + 2 * panel, width, panel);
    svg << "</svg>\n";
    detail::atomic_write(base + ".svg", svg.str());
}

/// Piecewise polynomial on [0, 1]: pieces are right-closed, i.e. piece j
/// covers (breaks[j], breaks[j+1]] with the first piece closed on the
/// left, so step functions like 1_{x <= 1/2} are expressible exactly.
struct PiecewisePoly {
    std::vector<double> breaks;
    std::vector<std::vector<double>> pieces; // ascending-degree coefficients

    double eval(double x) const {
        std::size_t j = 0;
        while (j + 2 < breaks.size() && x > breaks[j + 1]) ++j;
        double v = 0.0;
        const auto& c = pieces[j];
        for (std::size_t k = c.size(); k-- > 0;) v = v * x + c[k];
        return v;
    }
};

/// Parses a coefficient file:
///   coeffs
///   lambdas <v1> <v2> ...
///   gamma_max <v>
///   function <name> [lambda <v>]
///   breaks <b0> ... <bk>         # b0 = 0, bk = 1
///   poly <c0> <c1> ...           # one line per piece, ascending degree
/// Names: sigma, mu, alpha, beta, eta, g. sigma and mu accept one section
/// per lambda value or a single lambda-independent section.
inline ModelCoefficients read_coefficients(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::IoError, "cannot open: " + path);

    auto fail = [&](const std::string& msg) -> Error {
        return Error(ErrorKind::ParseError, "coefficient file: " + msg);
    };

    auto header = detail::next_content_line(in);
    if (!header) throw fail("empty file");
    {
        std::istringstream hs(*header);
        std::string tag;
        hs >> tag;
        if (tag != "coeffs") throw fail("expected 'coeffs' header");
    }

    struct Section {
        std::string name;
        std::optional<double> lambda;
        PiecewisePoly poly;
    };
    std::vector<double> lambdas;
    double gamma_max = 2.0;
    std::vector<Section> sections;

    std::optional<std::string> line;
    while ((line = detail::next_content_line(in))) {
        std::istringstream ls(*line);
        std::string key;
        ls >> key;
        if (key == "lambdas") {
            double v;
            while (ls >> v) lambdas.push_back(v);
            if (lambdas.empty()) throw fail("lambdas line needs at least one value");
        } else if (key == "gamma_max") {
            if (!(ls >> gamma_max) || gamma_max <= 0) throw fail("bad gamma_max");
        } else if (key == "function") {
            Section s;
            if (!(ls >> s.name)) throw fail("function line needs a name");
            std::string opt;
            if (ls >> opt) {
                double lv;
                if (opt != "lambda" || !(ls >> lv)) throw fail("bad function qualifier");
                s.lambda = lv;
            }
            auto bl = detail::next_content_line(in);
            if (!bl) throw fail("missing breaks line");
            std::istringstream bs(*bl);
            std::string btag;
            bs >> btag;
            if (btag != "breaks") throw fail("expected breaks line");
            double b;
            while (bs >> b) s.poly.breaks.push_back(b);
            if (s.poly.breaks.size() < 2 || s.poly.breaks.front() != 0.0 ||
                s.poly.breaks.back() != 1.0 ||
                !std::is_sorted(s.poly.breaks.begin(), s.poly.breaks.end()))
                throw fail("breaks must ascend from 0 to 1");
            for (std::size_t p = 0; p + 1 < s.poly.breaks.size(); ++p) {
                auto pl = detail::next_content_line(in);
                if (!pl) throw fail("missing poly line");
                std::istringstream ps(*pl);
                std::string ptag;
                ps >> ptag;
                if (ptag != "poly") throw fail("expected poly line");
                std::vector<double> coeffs;
                double cv;
                while (ps >> cv) coeffs.push_back(cv);
                if (coeffs.empty()) throw fail("poly line needs coefficients");
                s.poly.pieces.push_back(std::move(coeffs));
            }
            sections.push_back(std::move(s));
        } else {
            throw fail("unknown key '" + key + "'");
        }
    }
    if (lambdas.empty()) throw fail("missing lambdas line");

    auto shared = std::make_shared<std::map<std::string, std::map<double, PiecewisePoly>>>();
    auto plain = std::make_shared<std::map<std::string, PiecewisePoly>>();
    for (auto& s : sections) {
        if (s.lambda)
            (*shared)[s.name][*s.lambda] = std::move(s.poly);
        else
            (*plain)[s.name] = std::move(s.poly);
    }

    auto lookup_xl = [shared, plain](const std::string& name) {
        return [shared, plain, name](double x, double l) -> double {
            auto it = shared->find(name);
            if (it != shared->end()) {
                auto jt = it->second.find(l);
                if (jt != it->second.end()) return jt->second.eval(x);
            }
            auto pt = plain->find(name);
            if (pt != plain->end()) return pt->second.eval(x);
            throw Error(ErrorKind::ParseError, "coefficient file: missing function " + name);
        };
    };
    auto lookup_x = [plain](const std::string& name) {
        return [plain, name](double x) -> double {
            auto pt = plain->find(name);
            if (pt != plain->end()) return pt->second.eval(x);
            throw Error(ErrorKind::ParseError, "coefficient file: missing function " + name);
        };
    };

    ModelCoefficients c;
    c.sigma = lookup_xl("sigma");
    c.mu = lookup_xl("mu");
    c.alpha = lookup_x("alpha");
    c.beta = lookup_x("beta");
    c.eta = lookup_x("eta");
    c.g = lookup_x("g");
    c.lambda_values = lambdas;
    c.gamma_max = gamma_max;

    // surface missing functions now rather than mid-assembly
    for (double l : lambdas) {
        c.sigma(0.0, l);
        c.mu(0.0, l);
    }
    c.alpha(0.0);
    c.beta(0.0);
    c.eta(0.0);
    c.g(0.0);
    return c;
}

} // namespace hob
