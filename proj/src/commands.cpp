#include "gmrfsteg/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "gmrfsteg/error.hpp"
#include "gmrfsteg/lattice.hpp"
#include "gmrfsteg/oracle.hpp"

namespace gmrfsteg::cli {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code_for(const std::exception& e)
{
    if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const io::PgmError*>(&e) ||
        dynamic_cast<const io::MapError*>(&e))
        return kIo;
    return kUsage;
}

namespace {

struct Prepared {
    ImageGrid cover;
    estimation::ModelField model;
};

void validate(const RunConfig& cfg, bool needs_payload)
{
    if (cfg.input.empty())
        throw InvalidArgument("no input image given");
    if (cfg.threads < 1)
        throw InvalidArgument("--threads must be >= 1");
    if (needs_payload && !(cfg.payload_rate > 0.0 && cfg.payload_rate <= std::log2(3.0)))
        throw InvalidArgument("--payload must lie in (0, log2 3] bits per pixel");
}

std::string out_path(const RunConfig& cfg, const std::string& name)
{
    const fs::path p = fs::path(cfg.out_dir) / name;
    std::error_code ec;
    if (fs::exists(cfg.input, ec) && fs::exists(p, ec) && fs::equivalent(cfg.input, p, ec))
        throw InvalidArgument("output " + p.string() + " would overwrite the input image");
    return p.string();
}

void ensure_out_dir(const RunConfig& cfg)
{
    std::error_code ec;
    fs::create_directories(cfg.out_dir, ec);
    if (ec)
        throw IoError("cannot create output directory " + cfg.out_dir + ": " + ec.message());
}

Prepared prepare(const RunConfig& cfg)
{
    const auto bytes = io::read_file(cfg.input);
    Prepared p;
    p.cover = io::read_pgm(bytes);
    if (p.cover.width < 3 || p.cover.height < 3)
        throw InvalidArgument("image must be at least 3x3");
    const auto residual = filter::compute_residual(p.cover, cfg.wiener);
    const auto basis = estimation::build_basis(cfg.block, cfg.degree);
    p.model = estimation::estimate_model(residual, basis, cfg.threads);
    return p;
}

struct Stats {
    double min = std::numeric_limits<double>::infinity();
    double max = -std::numeric_limits<double>::infinity();
    double mean = 0.0;
};

/// Statistics over the first `cols` columns and `rows` rows.
Stats stats(const FloatGrid& g, std::size_t cols, std::size_t rows)
{
    Stats s;
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
            const double v = g.at(r, c);
            s.min = std::min(s.min, v);
            s.max = std::max(s.max, v);
            sum += v;
            ++n;
        }
    s.mean = n ? sum / n : 0.0;
    if (!n)
        s.min = s.max = 0.0;
    return s;
}

void put_stats(json& j, const std::string& key, const Stats& s)
{
    j[key + "_min"] = s.min;
    j[key + "_max"] = s.max;
    j[key + "_mean"] = s.mean;
}

void write_map(const RunConfig& cfg, const std::string& name, const FloatGrid& g)
{
    io::write_file(out_path(cfg, name), io::write_float_map(g));
}

std::string format_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_trace(const RunConfig& cfg, const std::vector<optimizer::TraceRow>& trace)
{
    std::string csv = "iter,lattice,lambda,payload_error\n";
    for (const auto& row : trace)
        csv += std::to_string(row.iter) + "," + row.lattice + "," + format_double(row.lambda) + "," +
               format_double(row.payload_error) + "\n";
    io::write_file(out_path(cfg, "lambda_trace.csv"), std::span(reinterpret_cast<const std::uint8_t*>(csv.data()), csv.size()));
}

void write_thetas(const RunConfig& cfg, const lattice::TreeSet& trees, std::size_t width, std::size_t height)
{
    FloatGrid th(width, height);
    FloatGrid tv(width, height);
    for (const auto* half : {&trees.a, &trees.b})
        for (const auto& t : *half)
            for (int k = 0; k < t.count; ++k) {
                const auto anchor = lattice::clique_anchor(t, k, width);
                (lattice::is_horizontal(t.directions[k]) ? th : tv)[anchor] = t.thetas[k];
            }
    write_map(cfg, "theta_h.gmap", th);
    write_map(cfg, "theta_v.gmap", tv);
}

optimizer::OptimizerConfig optimizer_config(const RunConfig& cfg, double payload_bits)
{
    optimizer::OptimizerConfig oc;
    oc.payload_bits = payload_bits;
    oc.beta_t = cfg.beta_t;
    oc.seed = cfg.seed;
    oc.tolerance = cfg.tolerance;
    oc.mode = cfg.cliques;
    oc.threads = cfg.threads;
    return oc;
}

double total_entropy(const FloatGrid& beta)
{
    double s = 0.0;
    for (double b : beta.values)
        s += optimizer::entropy_ternary(b);
    return s;
}

struct ProbsRun {
    Prepared prepared;
    optimizer::OptimizeResult opt;
    optimizer::ChangeProbMap beta;  // final, after optional smoothing
    embedding::CostMap costs;
    double final_lambda = 0.0;
    double payload_bits = 0.0;
};

ProbsRun run_probs(const RunConfig& cfg)
{
    validate(cfg, true);
    ProbsRun run;
    run.prepared = prepare(cfg);
    const auto& cover = run.prepared.cover;
    run.payload_bits = cfg.payload_rate * static_cast<double>(cover.size());
    const auto partition = lattice::tessellate(cover.width, cover.height);
    run.opt = optimizer::alternate_optimize(run.prepared.model, partition, optimizer_config(cfg, run.payload_bits));
    run.costs = embedding::probs_to_costs(run.opt.beta);
    if (cfg.smooth) {
        run.costs = embedding::smooth_costs(run.costs, cfg.kernel);
        auto sol = embedding::costs_to_probs(run.costs, run.payload_bits, cfg.tolerance, cfg.threads);
        run.beta = std::move(sol.beta);
        run.final_lambda = sol.lambda;
    } else {
        run.beta = run.opt.beta;
        run.final_lambda = 1.0;
    }
    return run;
}

json probs_summary(const char* command, const RunConfig& cfg, const ProbsRun& run)
{
    const auto& cover = run.prepared.cover;
    const double entropy = total_entropy(run.beta);
    json j;
    j["command"] = command;
    j["width"] = cover.width;
    j["height"] = cover.height;
    j["payload_bits"] = run.payload_bits;
    j["entropy_bits"] = entropy;
    j["payload_error"] = entropy - run.payload_bits;
    j["outer_iterations"] = run.opt.outer_iterations;
    j["converged"] = run.opt.converged;
    j["lambda_a"] = run.opt.lambda_a;
    j["lambda_b"] = run.opt.lambda_b;
    j["smooth"] = cfg.smooth;
    if (cfg.smooth)
        j["cost_lambda"] = run.final_lambda;
    put_stats(j, "beta", stats(run.beta, cover.width, cover.height));
    return j;
}

void write_probs_outputs(const RunConfig& cfg, const ProbsRun& run)
{
    write_map(cfg, "beta.gmap", run.beta);
    write_trace(cfg, run.opt.trace);
    if (cfg.dump_theta)
        write_thetas(cfg, run.opt.trees, run.beta.width, run.beta.height);
}

}  // namespace

int cmd_model(const RunConfig& cfg, std::ostream& out)
{
    validate(cfg, false);
    const auto p = prepare(cfg);
    ensure_out_dir(cfg);
    write_map(cfg, "variance.gmap", p.model.variance);
    write_map(cfg, "rho_h.gmap", p.model.rho_h);
    write_map(cfg, "rho_v.gmap", p.model.rho_v);

    const auto w = p.cover.width;
    const auto h = p.cover.height;
    json j;
    j["command"] = "model";
    j["width"] = w;
    j["height"] = h;
    put_stats(j, "variance", stats(p.model.variance, w, h));
    put_stats(j, "rho_h", stats(p.model.rho_h, w - 1, h));
    put_stats(j, "rho_v", stats(p.model.rho_v, w, h - 1));
    out << j.dump() << '\n';
    return kOk;
}

int cmd_probs(const RunConfig& cfg, std::ostream& out)
{
    const auto run = run_probs(cfg);
    ensure_out_dir(cfg);
    write_probs_outputs(cfg, run);
    if (cfg.smooth)
        write_map(cfg, "costs.gmap", run.costs);
    out << probs_summary("probs", cfg, run).dump() << '\n';
    return run.opt.converged ? kOk : kNotConverged;
}

int cmd_embed(const RunConfig& cfg, std::ostream& out)
{
    const auto run = run_probs(cfg);
    const auto stego = embedding::simulate_embedding(run.prepared.cover, run.beta, cfg.seed);
    ensure_out_dir(cfg);
    write_probs_outputs(cfg, run);
    write_map(cfg, "costs.gmap", run.costs);
    FloatGrid changes(stego.changes.width, stego.changes.height);
    for (std::size_t i = 0; i < changes.size(); ++i)
        changes[i] = stego.changes[i];
    write_map(cfg, "changes.gmap", changes);
    io::write_file(out_path(cfg, "stego.pgm"), io::write_pgm(stego.stego));

    auto j = probs_summary("embed", cfg, run);
    double expected = 0.0;
    for (double b : run.beta.values)
        expected += 2.0 * b;
    j["seed"] = cfg.seed;
    j["changes_plus"] = stego.plus;
    j["changes_minus"] = stego.minus;
    j["changes_expected"] = expected;
    j["change_rate_a"] = stego.change_rate_a;
    j["change_rate_b"] = stego.change_rate_b;
    out << j.dump() << '\n';
    return run.opt.converged ? kOk : kNotConverged;
}

FimKernel perturbed_kernel(const std::string& entry, double factor)
{
    if (entry != "i11" && entry != "i12" && entry != "i22")
        throw InvalidArgument("unknown FIM entry '" + entry + "'");
    return [entry, factor](const fim::CliqueParams& p) {
        auto f = fim::fim_clique(p);
        (entry == "i11" ? f.i11 : entry == "i12" ? f.i12 : f.i22) *= factor;
        return f;
    };
}

bool VerifyReport::pass() const
{
    return std::all_of(checks.begin(), checks.end(), [](const VerifyCheck& c) { return c.pass; });
}

namespace {

constexpr double kSigmas[] = {0.5, 1.0, 4.0, 25.0, 100.0};
constexpr double kRhos[] = {0.0, 0.3, -0.3, 0.6, -0.6, 0.9, -0.9};

/// Smallest conditional variance of the clique; the discrete sums approach the
/// continuous limit only when it is large against the unit quantization step.
double conditional_variance(const fim::CliqueParams& p)
{
    return std::min(p.sigma1, p.sigma2) * (1.0 - p.rho * p.rho);
}

std::vector<fim::CliqueParams> lattice_points(double min_conditional_variance = 0.0)
{
    std::vector<fim::CliqueParams> pts;
    for (double s1 : kSigmas)
        for (double s2 : kSigmas)
            for (double r : kRhos) {
                fim::CliqueParams p{s1, s2, r, 1.0};
                if (conditional_variance(p) >= min_conditional_variance)
                    pts.push_back(p);
            }
    return pts;
}

double worst(const std::array<double, 3>& e) { return std::max({e[0], e[1], e[2]}); }

VerifyCheck make_check(std::string name, std::string domain, double tolerance)
{
    VerifyCheck c;
    c.name = std::move(name);
    c.domain = std::move(domain);
    c.tolerance = tolerance;
    return c;
}

void record(VerifyCheck& c, double error)
{
    ++c.points;
    c.max_error = std::max(c.max_error, std::isnan(error) ? std::numeric_limits<double>::infinity() : error);
}

void finish(VerifyCheck& c) { c.pass = c.points > 0 && c.max_error <= c.tolerance; }

constexpr double kHessianDomain = 1.0;
constexpr double kAsymptoticDomain = 25.0;

}  // namespace

VerifyReport run_verify(const FimKernel& kernel)
{
    VerifyReport report;
    const auto all = lattice_points();
    const auto ln2 = std::log(2.0);

    auto quad = make_check("fim_closed_vs_quadrature", "full lattice", 0.01);
    auto moments = make_check("isserlis_moments", "full lattice", 0.01);
    auto mass = make_check("stego_mass_conservation", "full lattice", 1e-12);
    auto mixed = make_check("mixed_mass_derivative_zero", "full lattice", 1e-12);
    auto tree = make_check("kl_tree_single_clique", "full lattice", 1e-12);
    for (const auto& p : all) {
        const auto closed = kernel(p);
        record(quad, worst(oracle::fim_entry_errors(closed, oracle::fim_quadrature(p), p.rho)));
        record(moments, oracle::isserlis_check(p).max_rel_error);

        const auto pmf = oracle::cover_pmf(p, oracle::default_support(p));
        const double total = pmf.total();
        for (auto [b1, b2] : {std::pair{0.01, 0.02}, std::pair{1.0 / 3.0, 1.0 / 3.0}})
            record(mass, std::abs(oracle::stego_pmf(pmf, b1, b2).total() - total));
        record(mixed, std::abs(oracle::mixed_mass_derivative(pmf)));

        const double bn = 0.02;
        const double bc = 0.05;
        const double single = fim::kl_clique(bn, bc, closed);
        const double neighbors[] = {bn, 0.3, 0.1};
        const int thetas[] = {1, 0, 0};
        const fim::Fim2 fims[] = {closed, closed, closed};
        const double via_tree = fim::kl_tree(bc, neighbors, thetas, fims, fim::fi_single(p.sigma2, p.delta));
        record(tree, std::abs(via_tree - single) / single);
    }

    auto hess = make_check("hessian_fd_vs_discrete_fim", "min conditional variance >= 1", 0.02);
    for (const auto& p : lattice_points(kHessianDomain)) {
        const int t = oracle::default_support(p);
        const auto h = oracle::hessian_fd(p, 1e-3, t);
        const auto n = oracle::fim_numeric(p, t);
        const fim::Fim2 scaled{n.i11 / ln2, n.i12 / ln2, n.i22 / ln2};
        record(hess, worst(oracle::fim_entry_errors({h(0, 0), h(0, 1), h(1, 1)}, scaled, p.rho)));
    }

    auto discrete = make_check("fim_closed_vs_discrete", "min conditional variance >= 25", 0.01);
    auto kl_small = make_check("kl_quadratic_vs_exact_beta_le_0.02", "min conditional variance >= 25", 0.10);
    auto kl_large = make_check("kl_quadratic_vs_exact_beta_0.05", "min conditional variance >= 25", 0.25);
    for (const auto& p : lattice_points(kAsymptoticDomain)) {
        const auto closed = kernel(p);
        const int t = oracle::default_support(p);
        record(discrete, worst(oracle::fim_entry_errors(closed, oracle::fim_numeric(p, t), p.rho)));
        const auto pmf = oracle::cover_pmf(p, t);
        for (double b : {0.005, 0.01, 0.02, 0.05}) {
            const double exact = oracle::kl_exact(pmf, oracle::stego_pmf(pmf, b, b));
            const double err = std::abs(fim::kl_clique(b, b, closed) - exact) / exact;
            record(b <= 0.02 ? kl_small : kl_large, err);
        }
    }

    for (auto* c : {&quad, &moments, &hess, &discrete, &kl_small, &kl_large, &mass, &mixed, &tree}) {
        finish(*c);
        report.checks.push_back(*c);
    }
    return report;
}

int cmd_verify(std::ostream& out, const FimKernel& kernel)
{
    const auto report = run_verify(kernel);
    for (const auto& c : report.checks) {
        json j;
        j["check"] = c.name;
        j["domain"] = c.domain;
        j["points"] = c.points;
        j["max_error"] = c.max_error;
        j["tolerance"] = c.tolerance;
        j["pass"] = c.pass;
        out << j.dump() << '\n';
    }
    json j;
    j["command"] = "verify";
    j["checks"] = report.checks.size();
    j["pass"] = report.pass();
    out << j.dump() << '\n';
    return report.pass() ? kOk : kUsage;
}

}  // namespace gmrfsteg::cli
