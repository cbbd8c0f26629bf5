// anonmech: instance generation, single runs, simulation, posteriors,
// property verification and the benchmark experiments.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "anonmech/anonmech.hpp"

using namespace anonmech;

namespace {

std::uint64_t default_seed() {
  if (const char* env = std::getenv("ANONMECH_SEED")) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
      throw InputError(std::string("ANONMECH_SEED is not an unsigned integer: ") + env);
    }
  }
  return 1;
}

AuctionInstance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open instance file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_instance(buf.str());
}

std::string join(const std::vector<double>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? "," : "") + format_double(xs[i]);
  return out;
}

void emit(const std::string& text, const std::string& out_path) {
  std::cout << text;
  if (out_path.empty()) return;
  std::ofstream out(out_path);
  if (!out) throw InputError("cannot write " + out_path);
  out << text;
}

std::string csv(const std::vector<ExperimentRow>& rows) {
  std::string text = csv_header() + "\n";
  for (const auto& r : rows) text += to_csv(r) + "\n";
  return text;
}

bool all_pass(const std::vector<ExperimentRow>& rows) {
  return std::all_of(rows.begin(), rows.end(), [](const ExperimentRow& r) { return r.pass; });
}

// Bids arrive in file order; instances are stored sorted.
std::vector<double> to_sorted(const AuctionInstance& inst, const std::vector<double>& file_bids) {
  if (file_bids.size() != inst.size()) throw InputError("bid count must equal the number of bidders");
  std::vector<double> sorted(inst.size());
  for (std::size_t i = 0; i < inst.size(); ++i) sorted[i] = file_bids[inst.order()[i]];
  return sorted;
}

Outcome to_file_order(const AuctionInstance& inst, const Outcome& sorted) {
  Outcome out(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) out.bidders[inst.order()[i]] = sorted.bidders[i];
  out.finalize();
  return out;
}

void print_outcome(const Outcome& out) {
  std::vector<double> alloc, pay;
  std::cout << "bidder,allocation,item,payment\n";
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto& b = out[i];
    std::cout << i << "," << format_double(b.allocation) << "," << (b.item ? std::to_string(*b.item) : "") << ","
              << format_double(b.payment) << "\n";
    alloc.push_back(b.allocation);
    pay.push_back(b.payment);
  }
  std::cout << "allocations " << join(alloc) << "\n";
  std::cout << "payments " << join(pay) << "\n";
  std::cout << "revenue " << format_double(out.total_revenue) << "\n";
}

// ---------------------------------------------------------------------------

struct GenOptions {
  std::string family;
  std::size_t n = 10;
  double eps = 0.5;
  double delta = 1.0;
  std::size_t levels = 3;
  std::size_t L = 1;
  std::size_t k = 1;
  std::uint64_t seed = 0;
  bool scales = false;
  std::string out;
};

AuctionInstance generate(const GenOptions& o) {
  AuctionInstance inst = [&] {
    if (o.family == "harmonic") return instances::harmonic(o.n);
    if (o.family == "geometric") return instances::geometric(o.eps, o.n);
    if (o.family == "geometric-delta") return instances::geometric_delta(o.eps, o.delta, o.n);
    if (o.family == "nested-uniform") return instances::nested_uniform(o.levels, o.L);
    if (o.family == "random-k-ambiguous") return instances::random_k_ambiguous(o.n, o.k, o.seed);
    throw InputError("unknown family " + o.family);
  }();
  if (o.scales) inst = instances::with_scales(inst, instances::geometric_scales(inst.size()));
  return inst;
}

// ---------------------------------------------------------------------------

struct RunOptions {
  std::string mech;
  std::vector<double> prices;
  std::vector<double> bids;
  std::string instance;
  double price = 0.0;
  std::optional<std::size_t> units;
  std::size_t k = 1;
  std::uint64_t seed = 0;
};

int do_run(const RunOptions& o) {
  Rng rng(o.seed);
  const auto& m = o.mech;
  if (m == "dpm" || m == "dpm-nondsic" || m == "posted" || m == "single-price") {
    if (m != "single-price" && o.prices.size() != o.bids.size())
      throw InputError("--prices and --bids must have the same length");
    Outcome out;
    if (m == "dpm") out = run_dpm(PricingScheme(o.prices), o.bids, rng);
    else if (m == "dpm-nondsic") out = run_dpm_nondsic(PricingScheme(o.prices), o.bids, rng);
    else if (m == "posted") out = run_posted_prices(o.prices, o.bids);
    else out = run_single_price(o.price, o.units.value_or(o.bids.size()), o.bids, rng);
    print_outcome(out);
    return 0;
  }
  if (o.instance.empty()) throw InputError("--mech " + m + " needs --instance");
  const auto inst = load_instance(o.instance);
  const auto bids = to_sorted(inst, o.bids);
  Outcome out;
  if (m == "vcg-median") out = run_vcg_median_reserve(inst, bids, rng);
  else if (m == "optimal") out = run_optimal_anonymous_digital(inst, bids);
  else if (m == "top-item") out = run_top_item_second_price(inst, o.k, bids, rng);
  else if (m == "scaled-dpm") {
    if (o.prices.empty()) {
      out = mechanisms::scaled_dpm(inst, o.k)(bids, rng);
    } else {
      out = run_scaled_dpm(PricingScheme(o.prices), inst, bids, rng);
    }
  } else {
    throw InputError("unknown mechanism " + m);
  }
  print_outcome(to_file_order(inst, out));
  return 0;
}

// ---------------------------------------------------------------------------

struct SimOptions {
  std::string instance;
  std::string mech = "mixed-dpm";
  std::size_t k = 1;
  std::size_t trials = 100000;
  std::uint64_t seed = 0;
  double price = 0.0;
  bool tail = false;
  std::string out;
};

std::vector<ExperimentRow> tail_rows(const PayerTail& tail, const std::string& experiment, const std::string& id,
                                     const std::string& mech, std::size_t trials, std::uint64_t seed) {
  std::vector<ExperimentRow> rows;
  for (std::size_t t = 0; t < tail.counts.size(); ++t) {
    ExperimentRow r;
    r.experiment = experiment;
    r.instance_id = id + ":t" + std::to_string(t + 1);
    r.mechanism = mech;
    r.trials = trials;
    r.seed = seed;
    r.mean = tail.counts[t];
    r.std_error = tail.std_errors[t];
    r.benchmark = tail.thresholds[t];
    r.bound = tail.bound[t];
    r.ratio = tail.counts[t] / tail.bound[t];
    r.pass = tail.counts[t] >= tail.bound[t] - 3.0 * tail.std_errors[t];
    rows.push_back(r);
  }
  return rows;
}

int do_simulate(const SimOptions& o) {
  const auto inst = load_instance(o.instance);
  const std::string id = std::filesystem::path(o.instance).stem().string();
  std::vector<ExperimentRow> rows;
  if (o.tail) {
    const SchemeSampler sampler = o.k <= 1 ? mechanisms::k1_sampler(inst) : mechanisms::block_sampler(inst, o.k);
    const auto tail = payer_tail(sampler, inst, o.k, o.trials, o.seed);
    rows = tail_rows(tail, o.k <= 1 ? "tail-k1" : "tail-k", id, o.k <= 1 ? "k1-dpm" : "block-dpm", o.trials, o.seed);
  } else if (o.mech == "mixed-dpm" || o.mech == "position-mixture") {
    if ((o.mech == "position-mixture") != inst.has_scales())
      throw InputError(o.mech + (inst.has_scales() ? " is for digital goods" : " needs an instance with scales"));
    rows.push_back(approx_experiment(inst, o.k, o.trials, o.seed, id));
  } else {
    Mechanism mech;
    if (o.mech == "k1-dpm") mech = mechanisms::k1_dpm(inst);
    else if (o.mech == "block-dpm") mech = mechanisms::block_dpm(inst, o.k);
    else if (o.mech == "posted-monopoly") mech = mechanisms::posted_monopoly(inst);
    else if (o.mech == "single-price") mech = mechanisms::single_price(o.price, inst.units());
    else if (o.mech == "harmonic-mixture") mech = mechanisms::harmonic_mixture(inst);
    else if (o.mech == "vcg-median") mech = mechanisms::vcg_median(inst);
    else if (o.mech == "optimal") mech = mechanisms::optimal_anonymous(inst);
    else if (o.mech == "scaled-dpm") mech = mechanisms::scaled_dpm(inst, o.k);
    else if (o.mech == "top-item") mech = mechanisms::top_item(inst, o.k);
    else throw InputError("unknown mechanism " + o.mech);
    const auto stats = estimate_revenue(mech, inst, o.trials, o.seed);
    ExperimentRow r;
    r.experiment = "simulate";
    r.instance_id = id;
    r.mechanism = o.mech;
    r.trials = o.trials;
    r.seed = o.seed;
    r.mean = stats.mean;
    r.std_error = stats.std_error;
    r.benchmark = inst.has_scales() ? position_upper_bound(inst, ambiguity(inst)) : opt_digital(inst);
    r.ratio = stats.mean > 0.0 ? r.benchmark / stats.mean : INFINITY;
    r.bound = 0.0;  // nothing asserted
    r.pass = true;
    rows.push_back(r);
  }
  emit(csv(rows), o.out);
  return all_pass(rows) ? 0 : 1;
}

// ---------------------------------------------------------------------------

struct PosteriorOptions {
  std::string instance;
  std::vector<double> observed;
};

int do_posterior(const PosteriorOptions& o) {
  const auto inst = load_instance(o.instance);
  const auto h = posterior_pmf(inst, o.observed, union_support(inst));
  std::cout << "value,mass\n";
  for (std::size_t s = 0; s < h.size(); ++s)
    std::cout << format_double(h.support[s]) << "," << format_double(h.masses[s]) << "\n";
  const auto best = optimal_price_from_pmf(h);
  std::cout << "optimal price " << format_double(best.price) << " revenue " << format_double(best.revenue) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

struct VerifyOptions {
  std::string mech;
  std::vector<double> prices;
  std::vector<double> grid;
  std::size_t n = 2;
  std::string property = "all";
  std::string instance;
  double tol = kDefaultTolerance;
  std::string csv;
};

int do_verify(const VerifyOptions& o) {
  ExactMechanism mech;
  const auto& m = o.mech;
  std::optional<AuctionInstance> inst;
  if (!o.instance.empty()) inst = load_instance(o.instance);
  auto need_instance = [&] {
    if (!inst) throw InputError("--mech " + m + " needs --instance");
    if (inst->size() != o.n) throw InputError("--n must equal the instance size");
    return *inst;
  };
  const PricingScheme scheme(o.prices);
  if (m == "dpm")
    mech = over_tie_breaks([scheme](std::span<const double> b, std::span<const std::size_t> p) {
      return run_dpm(scheme, b, p);
    });
  else if (m == "dpm-nondsic")
    mech = over_tie_breaks([scheme](std::span<const double> b, std::span<const std::size_t> p) {
      return run_dpm_nondsic(scheme, b, p);
    });
  else if (m == "single-price")
    mech = over_tie_breaks([p0 = o.prices.empty() ? 0.0 : o.prices[0], n = o.n](
                               std::span<const double> b, std::span<const std::size_t> p) {
      return run_single_price(p0, n, b, p);
    });
  else if (m == "posted")
    mech = deterministic([prices = o.prices](std::span<const double> b) { return run_posted_prices(prices, b); });
  else if (m == "optimal")
    mech = deterministic([i = need_instance()](std::span<const double> b) {
      return run_optimal_anonymous_digital(i, b);
    });
  else if (m == "scaled-dpm")
    mech = over_tie_breaks([scheme, i = need_instance()](std::span<const double> b, std::span<const std::size_t> p) {
      return expected_scaled_dpm(scheme, i, b, p);
    });
  else
    throw InputError("unknown mechanism " + m);

  std::vector<Property> props;
  if (o.property == "all") props = {Property::Dsic, Property::Ir, Property::Anonymity, Property::Monotone};
  else props = {parse_property(o.property)};

  bool ok = true;
  std::string violations;
  for (Property p : props) {
    const auto report = check_property(mech, p, o.grid, o.n, o.tol);
    std::cout << format_report(report);
    ok = ok && report.pass();
    violations += violations_csv(report);
  }
  if (!o.csv.empty()) {
    std::ofstream out(o.csv);
    if (!out) throw InputError("cannot write " + o.csv);
    out << violations;
  }
  return ok ? 0 : 1;
}

// ---------------------------------------------------------------------------

struct BenchOptions {
  std::string name;
  std::size_t n = 0;
  std::size_t k = 2;
  double eps = 0.5;
  double delta = 0.01;
  std::size_t levels = 3;
  std::size_t L = 12;
  std::size_t trials = 100000;
  std::size_t instances = 1;
  std::uint64_t seed = 0;
  std::string out;
};

ExperimentRow exact_row(std::string experiment, std::string id, std::string mech, std::uint64_t seed) {
  ExperimentRow r;
  r.experiment = std::move(experiment);
  r.instance_id = std::move(id);
  r.mechanism = std::move(mech);
  r.trials = 0;
  r.seed = seed;
  return r;
}

std::vector<ExperimentRow> bench_harmonic(const BenchOptions& o) {
  const std::size_t n = o.n ? o.n : 100;
  const auto inst = instances::harmonic(n);
  std::vector<double> candidates;
  for (std::size_t i = 0; i < n; ++i) candidates.push_back(inst.low(i));
  const auto best = best_price_among(inst, candidates);
  auto r = exact_row("harmonic", "harmonic-" + std::to_string(n), "best-single-price", o.seed);
  r.mean = best.revenue;
  r.benchmark = opt_digital(inst);
  r.ratio = r.benchmark / r.mean;
  r.bound = harmonic_number(n);
  r.pass = best.revenue == 1.0 && std::abs(r.benchmark - r.bound) <= 1e-12;
  return {r};
}

std::vector<ExperimentRow> bench_geometric(const BenchOptions& o) {
  const std::size_t n = o.n ? o.n : 10;
  const auto inst = instances::geometric(o.eps, n);
  std::vector<double> candidates;
  for (std::size_t i = 1; i <= n; ++i) candidates.push_back(std::pow(1.0 / o.eps, static_cast<double>(i)));
  const auto best = best_price_among(inst, candidates);
  auto r = exact_row("geometric", "geometric-" + format_double(o.eps) + "-" + std::to_string(n),
                     "best-single-price", o.seed);
  r.mean = best.revenue;
  r.benchmark = opt_digital(inst);
  r.ratio = r.benchmark / r.mean;
  r.bound = 1.0 / (1.0 - o.eps);
  r.pass = r.mean <= r.bound * (1 + 1e-12) && std::abs(r.benchmark - static_cast<double>(n)) <= 1e-9 * n;
  return {r};
}

std::vector<ExperimentRow> bench_geometric_delta(const BenchOptions& o) {
  const std::size_t n = o.n ? o.n : 4;
  if (n > 12) throw InputError("geometric-delta enumerates 2^n profiles; use --n <= 12");
  std::vector<ExperimentRow> rows;
  for (double delta : {1.0, o.delta}) {
    const auto inst = instances::geometric_delta(o.eps, delta, n);
    auto r = exact_row("geometric-delta", "geometric-delta-" + format_double(delta) + "-" + std::to_string(n),
                       "optimal-anonymous", o.seed);
    r.mean = exact_expectation(
        inst, [&](std::span<const double> v) { return run_optimal_anonymous_digital(inst, v).total_revenue; });
    r.benchmark = opt_digital(inst);
    r.ratio = r.benchmark / r.mean;
    r.bound = 1.0;
    r.pass = r.ratio >= 1.0 - 1e-12;
    rows.push_back(r);
  }
  return rows;
}

std::vector<ExperimentRow> bench_approx(const BenchOptions& o, std::size_t k, bool scaled) {
  const std::size_t n = o.n ? o.n : (k <= 1 ? 20 : 30);
  std::vector<ExperimentRow> rows;
  for (std::size_t s = 0; s < o.instances; ++s) {
    const std::uint64_t inst_seed = o.seed + s;
    auto inst = instances::random_k_ambiguous(n, k, inst_seed);
    if (scaled) inst = instances::with_scales(inst, instances::geometric_scales(n));
    const std::string id = "random-n" + std::to_string(n) + "-k" + std::to_string(k) + "-s" + std::to_string(inst_seed);
    rows.push_back(approx_experiment(inst, k, o.trials, inst_seed, id));
  }
  return rows;
}

std::vector<ExperimentRow> bench_tail(const BenchOptions& o, std::size_t k) {
  const std::size_t n = o.n ? o.n : (k <= 1 ? 20 : 30);
  std::vector<ExperimentRow> rows;
  for (std::size_t s = 0; s < o.instances; ++s) {
    const std::uint64_t inst_seed = o.seed + s;
    const auto inst = instances::random_k_ambiguous(n, k, inst_seed);
    const SchemeSampler sampler = k <= 1 ? mechanisms::k1_sampler(inst) : mechanisms::block_sampler(inst, k);
    const auto tail = payer_tail(sampler, inst, k, o.trials, inst_seed);
    const std::string id = "random-n" + std::to_string(n) + "-k" + std::to_string(k) + "-s" + std::to_string(inst_seed);
    auto part = tail_rows(tail, k <= 1 ? "tail-k1" : "tail-k", id, k <= 1 ? "k1-dpm" : "block-dpm", o.trials,
                          inst_seed);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  return rows;
}

std::vector<ExperimentRow> bench_harmonic_mixture(const BenchOptions& o) {
  const std::size_t m = o.n ? o.n : 20;
  std::vector<ExperimentRow> rows;
  for (std::size_t s = 0; s < o.instances; ++s) {
    const std::uint64_t inst_seed = o.seed + s;
    Rng rng(derive_seed(inst_seed, 0x4a11));
    std::vector<ValueDistribution> ds;
    for (std::size_t i = 0; i < m; ++i) ds.emplace_back(UniformInterval{0.0, 0.1 + 9.9 * uniform01(rng)});
    const AuctionInstance inst(ds);
    double medians = 0.0;
    for (const auto& d : inst.bidders()) medians += median(d);
    const auto stats = estimate_revenue(mechanisms::harmonic_mixture(inst), inst, o.trials, inst_seed);
    ExperimentRow r;
    r.experiment = "harmonic-mixture";
    r.instance_id = "uniform-m" + std::to_string(m) + "-s" + std::to_string(inst_seed);
    r.mechanism = "harmonic-reserve-mixture";
    r.trials = o.trials;
    r.seed = inst_seed;
    r.mean = stats.mean;
    r.std_error = stats.std_error;
    r.benchmark = medians / (2.0 * harmonic_number(m));
    r.ratio = r.benchmark / r.mean;
    r.bound = 1.0;
    r.pass = stats.mean >= r.benchmark - 3.0 * stats.std_error;
    rows.push_back(r);
  }
  return rows;
}

std::vector<ExperimentRow> bench_nested(const BenchOptions& o) {
  const auto levels = static_cast<std::int64_t>(o.levels);
  const auto L = static_cast<std::int64_t>(o.L);
  if (levels < 2) throw InputError("nested-uniform needs --levels >= 2");
  std::vector<ExperimentRow> rows;
  for (std::int64_t t = 1; t < levels; ++t) {
    const std::int64_t pow2 = std::int64_t{1} << t;
    const Rational edge = (Rational(2 * pow2, 3) - 1) * L;
    Rational worst = 0;
    bool ok = true, any = false;
    for (std::int64_t b = 0; b <= (pow2 - 1) * L; ++b) {
      const auto ratio = nested_density_ratio(L, levels, t, b);
      if (Rational(b) > edge + 1) {
        any = true;
        worst = std::max(worst, ratio);
        ok = ok && ratio < Rational(1, 4);
      }
      if (Rational(b) == edge) ok = ok && ratio == Rational(1, 4);
    }
    auto r = exact_row("nested-uniform",
                       "nested-n" + std::to_string(levels) + "-L" + std::to_string(L) + ":t" + std::to_string(t),
                       "density-ratio", o.seed);
    r.mean = any ? static_cast<double>(worst) : 0.0;
    r.benchmark = 0.25;
    r.ratio = r.mean / 0.25;
    r.bound = 1.0;
    r.pass = ok;
    rows.push_back(r);
  }
  return rows;
}

std::vector<ExperimentRow> bench_intro(const BenchOptions& o) {
  const AuctionInstance inst({PointMass{2.0}, PointMass{1.0}});
  std::vector<ExperimentRow> rows;
  for (const auto& [bids, expected] : {std::pair{std::vector<double>{2.0, 1.0}, 3.0},
                                       std::pair{std::vector<double>{2.0, 2.0}, 2.0}}) {
    auto r = exact_row("intro", "intro-bids-" + join(bids), "optimal-anonymous", o.seed);
    r.mean = run_optimal_anonymous_digital(inst, bids).total_revenue;
    r.benchmark = expected;
    r.ratio = r.benchmark / r.mean;
    r.bound = 1.0;
    r.pass = r.mean == expected;
    rows.push_back(r);
  }
  return rows;
}

int do_bench(const BenchOptions& o) {
  std::vector<ExperimentRow> rows;
  if (o.name == "harmonic") rows = bench_harmonic(o);
  else if (o.name == "geometric") rows = bench_geometric(o);
  else if (o.name == "geometric-delta") rows = bench_geometric_delta(o);
  else if (o.name == "k1-approx") rows = bench_approx(o, 1, false);
  else if (o.name == "k-approx") rows = bench_approx(o, o.k, false);
  else if (o.name == "tail-k1") rows = bench_tail(o, 1);
  else if (o.name == "tail-k") rows = bench_tail(o, o.k);
  else if (o.name == "harmonic-mixture") rows = bench_harmonic_mixture(o);
  else if (o.name == "position") rows = bench_approx(o, 1, true);
  else if (o.name == "nested-uniform") rows = bench_nested(o);
  else if (o.name == "intro") rows = bench_intro(o);
  else throw InputError("unknown benchmark " + o.name);
  emit(csv(rows), o.out);
  return all_pass(rows) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Anonymous pricing mechanisms: simulation and verification"};
  app.require_subcommand(1);
  std::uint64_t seed = 0;
  try {
    seed = default_seed();
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  GenOptions gen;
  gen.seed = seed;
  auto* g = app.add_subcommand("gen", "Write an instance file for a named family");
  g->add_option("family", gen.family, "harmonic | geometric | geometric-delta | nested-uniform | random-k-ambiguous")
      ->required()
      ->check(CLI::IsMember({"harmonic", "geometric", "geometric-delta", "nested-uniform", "random-k-ambiguous"}));
  g->add_option("--n", gen.n, "Number of bidders");
  g->add_option("--eps", gen.eps, "Geometric ratio in (0, 1)");
  g->add_option("--delta", gen.delta, "Mass scaling in (0, 1]");
  g->add_option("--levels", gen.levels, "Nested-uniform levels");
  g->add_option("--L", gen.L, "Nested-uniform multiplicity");
  g->add_option("--k", gen.k, "Ambiguity");
  g->add_option("--seed", gen.seed, "Generator seed");
  g->add_flag("--scales", gen.scales, "Attach position scales 2^-j");
  g->add_option("-o,--out", gen.out, "Output file (stdout if omitted)");

  RunOptions run;
  run.seed = seed;
  auto* r = app.add_subcommand("run", "Run one mechanism on explicit bids");
  r->add_option("--mech", run.mech, "Mechanism")
      ->required()
      ->check(CLI::IsMember(
          {"dpm", "dpm-nondsic", "single-price", "posted", "vcg-median", "scaled-dpm", "top-item", "optimal"}));
  r->add_option("--prices", run.prices, "Comma-separated prices")->delimiter(',');
  r->add_option("--bids", run.bids, "Comma-separated bids in file order")->delimiter(',')->required();
  r->add_option("--instance", run.instance, "Instance file");
  r->add_option("--price", run.price, "Single price");
  r->add_option("--units", run.units, "Supply for single-price");
  r->add_option("--k", run.k, "Ambiguity for top-item and scaled-dpm");
  r->add_option("--seed", run.seed, "Tie-break and lottery seed");

  SimOptions sim;
  sim.seed = seed;
  auto* s = app.add_subcommand("simulate", "Monte Carlo revenue or payer-tail estimate, as CSV");
  s->add_option("--instance", sim.instance, "Instance file")->required();
  s->add_option("--mech", sim.mech, "Mechanism (default mixed-dpm)")
      ->check(CLI::IsMember({"mixed-dpm", "position-mixture", "k1-dpm", "block-dpm", "posted-monopoly", "single-price",
                             "harmonic-mixture", "vcg-median", "optimal", "scaled-dpm", "top-item"}));
  s->add_option("--k", sim.k, "Ambiguity bound used by the constructions");
  s->add_option("--trials", sim.trials, "Trials");
  s->add_option("--seed", sim.seed, "Master seed");
  s->add_option("--price", sim.price, "Price for single-price");
  s->add_flag("--tail", sim.tail, "Report payer tails Y_t instead of revenue");
  s->add_option("-o,--out", sim.out, "Also write the CSV here");

  PosteriorOptions post;
  auto* p = app.add_subcommand("posterior", "Posterior of the remaining bidder's value and its optimal price");
  p->add_option("--instance", post.instance, "Instance file with discrete priors")->required();
  p->add_option("--observed", post.observed, "The other n-1 values")->delimiter(',')->required();

  VerifyOptions ver;
  auto* v = app.add_subcommand("verify", "Exhaustive grid check of DSIC, IR, anonymity and monotonicity");
  v->add_option("--mech", ver.mech, "Mechanism")
      ->required()
      ->check(CLI::IsMember({"dpm", "dpm-nondsic", "single-price", "posted", "optimal", "scaled-dpm"}));
  v->add_option("--prices", ver.prices, "Comma-separated prices")->delimiter(',');
  v->add_option("--grid", ver.grid, "Comma-separated bid grid")->delimiter(',')->required();
  v->add_option("--n", ver.n, "Number of bidders");
  v->add_option("--property", ver.property, "all | DSIC | IR | ANONYMITY | MONOTONE");
  v->add_option("--instance", ver.instance, "Instance file for optimal and scaled-dpm");
  v->add_option("--tol", ver.tol, "Tolerance");
  v->add_option("--csv", ver.csv, "Write violations as CSV");

  BenchOptions bench;
  bench.seed = seed;
  auto* b = app.add_subcommand("bench", "Run a named experiment end to end");
  b->add_option("name", bench.name, "Experiment")
      ->required()
      ->check(CLI::IsMember({"harmonic", "geometric", "geometric-delta", "k1-approx", "k-approx", "tail-k1", "tail-k",
                             "harmonic-mixture", "position", "nested-uniform", "intro"}));
  b->add_option("--n", bench.n, "Instance size");
  b->add_option("--k", bench.k, "Ambiguity for k-approx and tail-k");
  b->add_option("--eps", bench.eps, "Geometric ratio");
  b->add_option("--delta", bench.delta, "Mass scaling for geometric-delta");
  b->add_option("--levels", bench.levels, "Nested-uniform levels");
  b->add_option("--L", bench.L, "Nested-uniform multiplicity");
  b->add_option("--trials", bench.trials, "Monte Carlo trials");
  b->add_option("--instances", bench.instances, "Random instances to draw");
  b->add_option("--seed", bench.seed, "Master seed");
  b->add_option("-o,--out", bench.out, "Also write the CSV here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (g->parsed()) {
      const auto text = serialize_instance(generate(gen));
      if (gen.out.empty()) {
        std::cout << text;
      } else {
        std::ofstream out(gen.out);
        if (!out) throw InputError("cannot write " + gen.out);
        out << text;
      }
      return 0;
    }
    if (r->parsed()) return do_run(run);
    if (s->parsed()) return do_simulate(sim);
    if (p->parsed()) return do_posterior(post);
    if (v->parsed()) return do_verify(ver);
    if (b->parsed()) return do_bench(bench);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
