#include "lowps/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lowps/approximation.hpp"
#include "lowps/boundary_solvers.hpp"
#include "lowps/errors.hpp"
#include "lowps/grid.hpp"
#include "lowps/io.hpp"
#include "lowps/linalg.hpp"
#include "lowps/lowrank_resolvent.hpp"
#include "lowps/oracle.hpp"
#include "lowps/transfer_operator.hpp"

namespace lowps::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// JSON config reader for CLI11. Keys are long option names of the active
// subcommand; '_' and '-' are interchangeable. Arrays give repeated values.
class JsonConfig : public CLI::Config {
 public:
  explicit JsonConfig(const CLI::App* root) : root_(root) {}

  std::string to_config(const CLI::App*, bool, bool, std::string) const override {
    return "{}";
  }

  std::vector<CLI::ConfigItem> from_config(std::istream& in) const override {
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw ParseError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ParseError("config must be a JSON object");
    std::vector<std::string> parents;
    for (const auto* sub : root_->get_subcommands()) parents.push_back(sub->get_name());
    std::vector<CLI::ConfigItem> items;
    for (const auto& [raw_key, value] : j.items()) {
      // {"grid": {...}} sections: the active one merges, the others are skipped.
      if (value.is_object() && is_subcommand(raw_key)) {
        if (std::find(parents.begin(), parents.end(), raw_key) != parents.end()) collect(value, parents, items);
        continue;
      }
      collect(json{{raw_key, value}}, parents, items);
    }
    return items;
  }

 private:
  const CLI::App* root_;

  bool is_subcommand(const std::string& name) const {
    for (const auto* sub : root_->get_subcommands({})) {
      if (sub->get_name() == name) return true;
    }
    return false;
  }

  static std::string scalar(const json& v, const std::string& key) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_integer() || v.is_number_unsigned()) return v.dump();
    if (v.is_number_float()) return io::format_double(v.get<double>());
    throw ParseError("config key '" + key + "' has an unsupported value " + v.dump());
  }

  static void collect(const json& obj, std::vector<std::string> parents,
                      std::vector<CLI::ConfigItem>& items) {
    for (const auto& [raw_key, value] : obj.items()) {
      std::string key = raw_key;
      std::replace(key.begin(), key.end(), '_', '-');
      if (value.is_object()) {
        auto sub = parents;
        sub.push_back(key);
        collect(value, sub, items);
        continue;
      }
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = key;
      if (value.is_array()) {
        for (const auto& e : value) item.inputs.push_back(scalar(e, raw_key));
      } else {
        item.inputs.push_back(scalar(value, raw_key));
      }
      items.push_back(std::move(item));
    }
  }
};

struct GridArgs {
  double re_min = -1.5, re_max = 1.5, im_min = -1.5, im_max = 1.5;
  Index n_re = 50, n_im = 50;
  std::size_t cap = kDefaultGridCap;

  GridSpec spec() const {
    GridSpec g{re_min, re_max, im_min, im_max, n_re, n_im};
    g.validate(cap);
    return g;
  }
};

struct Common {
  std::string out_dir = ".";
  int threads = 0;
  std::uint64_t seed = 0;
};

struct InputArgs {
  std::string matrix, u, v;
};

struct GridCmd {
  Common common;
  InputArgs input;
  GridArgs grid;
  std::string mode = "exact";
  Index rank = 0;
  Index sketch = 0;
  double delta = 0.2;
  std::vector<double> eps{0.01, 0.1};
  bool dense_oracle = false;
};

struct StabilityCmd {
  Common common;
  InputArgs input;
  std::string task = "d2i";
  double eps = 0.1;
  double tol = 1e-10;
};

struct KoopmanCmd {
  Common common;
  GridArgs grid;
  std::string trajectory;
  std::string simulate;
  Index n = 1000;
  std::vector<double> drift{-0.7, 0.3, 0.3, -0.7};
  double sigma = 1.0;
  double dt = 0.1;
  int noise_exponent = 4;
  double bandwidth = 0.0;
  Index rank = 20;
  double gamma = 1e-6;
  bool uncentered = false;
  std::vector<double> kreiss_eps;
  std::string save_trajectory;
};

struct BenchCmd {
  Common common;
  std::vector<Index> dims{200, 500, 1000};
  std::vector<Index> ranks{10};
  Index grid_m = 2500;
  int trials = 1;
  Index dense_sample = 0;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--out-dir", c.out_dir, "Directory for output files")->capture_default_str();
  app->add_option("--threads", c.threads, "Worker threads (0: all cores)")->capture_default_str();
  app->add_option("--seed", c.seed, "Random seed")->capture_default_str();
}

void add_input(CLI::App* app, InputArgs& in) {
  auto* m = app->add_option("--matrix", in.matrix, "Dense matrix (Matrix Market)");
  auto* u = app->add_option("--u", in.u, "Left factor U of A = U V* (Matrix Market)");
  auto* v = app->add_option("--v", in.v, "Right factor V (Matrix Market)");
  u->needs(v);
  v->needs(u);
  m->excludes(u);
  m->excludes(v);
}

void add_grid(CLI::App* app, GridArgs& g) {
  app->add_option("--re-min", g.re_min, "Smallest real part")->capture_default_str();
  app->add_option("--re-max", g.re_max, "Largest real part")->capture_default_str();
  app->add_option("--im-min", g.im_min, "Smallest imaginary part")->capture_default_str();
  app->add_option("--im-max", g.im_max, "Largest imaginary part")->capture_default_str();
  app->add_option("--n-re", g.n_re, "Grid points along the real axis")->capture_default_str();
  app->add_option("--n-im", g.n_im, "Grid points along the imaginary axis")->capture_default_str();
  app->add_option("--grid-cap", g.cap, "Largest accepted number of grid points")
      ->capture_default_str();
}

fs::path prepare_out_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory '" + dir + "'");
  return fs::path(dir);
}

void write_json(const fs::path& path, const json& j) {
  io::TextWriter w(path.string());
  w.line(j.dump(2));
  w.close();
}

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

json complex_json(Complex z) { return json::array({z.real(), z.imag()}); }

// Factors of the numerical rank of a, keeping singular values above
// 1e-12 times the largest.
LowRankFactors factors_from_dense(const CMatrix& a) {
  if (a.rows() != a.cols()) throw PreconditionError("the matrix must be square");
  const ThinSvd svd = thin_svd(a);
  const double top = svd.s.size() ? svd.s(0) : 0.0;
  Index r = 0;
  while (r < svd.s.size() && svd.s(r) > 1e-12 * top) ++r;
  if (r == 0) r = 1;  // zero matrix: one zero column pair
  if (r >= a.rows())
    throw PreconditionError("the matrix has full numerical rank " + std::to_string(r) +
                            "; use --mode truncated or randomized");
  return LowRankFactors(svd.u.leftCols(r) * svd.s.head(r).asDiagonal(), svd.v.leftCols(r));
}

struct LoadedInput {
  std::optional<CMatrix> dense;
  std::optional<LowRankFactors> factors;

  const CMatrix& dense_matrix() {
    if (!dense) dense = factors->dense();
    return *dense;
  }
  const LowRankFactors& low_rank() {
    if (!factors) factors = factors_from_dense(*dense);
    return *factors;
  }
};

LoadedInput load_input(const InputArgs& in) {
  LoadedInput out;
  if (!in.matrix.empty()) {
    out.dense = io::read_matrix_market(in.matrix);
    if (out.dense->rows() != out.dense->cols())
      throw PreconditionError("'" + in.matrix + "' is not square");
  } else if (!in.u.empty()) {
    out.factors = LowRankFactors(io::read_matrix_market(in.u), io::read_matrix_market(in.v));
  } else {
    throw ParseError("an input is required: --matrix, or --u with --v");
  }
  return out;
}

int cmd_grid(GridCmd& c, std::ostream& out) {
  const GridSpec grid = c.grid.spec();
  for (double e : c.eps)
    if (!(e >= 0.0) || !std::isfinite(e)) throw PreconditionError("eps levels must be finite and >= 0");
  LoadedInput input = load_input(c.input);
  const fs::path dir = prepare_out_dir(c.common.out_dir);

  json summary;
  summary["mode"] = c.mode;
  double inflation = 0.0;
  std::vector<double> values;

  if (c.dense_oracle) {
    values = oracle::dense_sigma_grid(input.dense_matrix(), grid, c.common.threads);
    summary["dense_oracle"] = true;
  } else if (c.mode == "exact") {
    const LowRankFactors& f = input.low_rank();
    summary["rank"] = f.rank();
    values = mu_grid(GramCache::from_factors(f), grid, c.common.threads);
  } else if (c.mode == "truncated" || c.mode == "randomized") {
    const CMatrix& a = input.dense_matrix();
    if (c.rank < 1) throw PreconditionError("--rank is required for mode " + c.mode);
    std::optional<LocalizationSet> set;
    if (c.mode == "truncated") {
      set = localization_from_truncation(truncate_svd(a, c.rank));
    } else {
      const Index k = c.sketch > 0 ? c.sketch : std::min(a.rows() - 1, c.rank + 10);
      set = randomized_localization(LinearOperatorHandle::from_dense(a), c.rank, k, c.delta,
                                    c.common.seed);
      summary["sketch"] = k;
      summary["seed"] = c.common.seed;
      summary["sigma_next"] = set->sigma_next;
      summary["alpha"] = set->alpha;
      summary["residual_estimate"] = set->residual_estimate;
      if (set->certified_inflation) summary["certified_inflation"] = *set->certified_inflation;
    }
    inflation = set->inflation;
    summary["rank"] = c.rank;
    summary["inflation"] = inflation;
    summary["confidence"] = set->confidence;
    values = mu_grid(set->grams, grid, c.common.threads);
  } else {
    throw ParseError("unknown mode '" + c.mode + "'");
  }

  const bool with_inflation = !c.dense_oracle && c.mode != "exact";
  io::TextWriter csv((dir / "grid.csv").string());
  csv.line(with_inflation ? "re,im,mu,inflation" : "re,im,mu");
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Complex z = grid.point(k);
    std::vector<std::string> row{io::format_double(z.real()), io::format_double(z.imag()),
                                 io::format_double(values[k])};
    if (with_inflation) row.push_back(io::format_double(inflation));
    csv.row(row);
  }
  csv.close();

  json levels = json::array();
  for (double e : c.eps) {
    std::size_t count = 0;
    for (double m : values) count += m <= e + inflation ? 1 : 0;
    levels.push_back({{"eps", e}, {"threshold", e + inflation}, {"count", count}});
  }
  summary["points"] = grid.size();
  summary["levels"] = levels;
  write_json(dir / "levels.json", summary);
  out << summary.dump(2) << "\n";
  return 0;
}

json report_json(const std::string& task, const StabilityReport& r) {
  json trace = json::array();
  for (const auto& t : r.trace) trace.push_back({t.iterate, t.value});
  return {{"task", task},
          {"value", number_or_null(r.value)},
          {"argpoint", complex_json(r.argpoint)},
          {"iterations", r.iterations},
          {"converged", r.converged},
          {"bracket_width", number_or_null(r.bracket_width)},
          {"argmax_epsilon", number_or_null(r.argmax_epsilon)},
          {"cross_check", number_or_null(r.cross_check)},
          {"trace", trace}};
}

json extremal_json(const std::string& task, double eps, const ExtremalPoint& p) {
  return {{"task", task},         {"eps", eps},
          {"value", p.value},     {"argpoint", complex_json(p.point)},
          {"iterations", p.iterations}, {"converged", true},
          {"trace", p.trace}};
}

int cmd_stability(StabilityCmd& c, std::ostream& out) {
  LoadedInput input = load_input(c.input);
  const GramCache g = GramCache::from_factors(input.low_rank());
  const fs::path dir = prepare_out_dir(c.common.out_dir);
  json report;
  if (c.task == "d2i") {
    StabilityOptions opt;
    opt.tol = c.tol;
    report = report_json(c.task, distance_to_instability(g, opt));
    report.erase("argmax_epsilon");
  } else if (c.task == "kreiss") {
    report = report_json(c.task, kreiss_discrete(g));
  } else if (c.task == "kreiss_c") {
    report = report_json(c.task, kreiss_continuous(g));
  } else if (c.task == "radius" || c.task == "abscissa") {
    SolverOptions opt;
    opt.tol = c.tol;
    report = extremal_json(c.task, c.eps,
                           c.task == "radius" ? pseudospectral_radius(g, c.eps, opt)
                                              : pseudospectral_abscissa(g, c.eps, opt));
  } else {
    throw ParseError("unknown task '" + c.task + "'");
  }
  write_json(dir / "stability.json", report);
  out << report.dump(2) << "\n";
  return 0;
}

Trajectory koopman_trajectory(const KoopmanCmd& c) {
  if (!c.trajectory.empty()) {
    if (!c.simulate.empty()) throw ParseError("--trajectory and --simulate are exclusive");
    return io::read_trajectory_csv(c.trajectory);
  }
  if (c.simulate == "ou") {
    if (c.drift.size() != 4) throw ParseError("--drift takes four numbers a11 a12 a21 a22");
    RMatrix a(2, 2);
    a << c.drift[0], c.drift[1], c.drift[2], c.drift[3];
    return simulate_ou(c.n, a, c.sigma, c.dt, c.common.seed);
  }
  if (c.simulate == "logistic") return simulate_logistic(c.n, c.noise_exponent, c.common.seed);
  if (c.simulate.empty()) throw ParseError("an input is required: --trajectory or --simulate");
  throw ParseError("unknown simulation '" + c.simulate + "'");
}

int cmd_koopman(KoopmanCmd& c, std::ostream& out) {
  const GridSpec grid = c.grid.spec();
  const Trajectory traj = koopman_trajectory(c);
  traj.validate();
  const fs::path dir = prepare_out_dir(c.common.out_dir);
  if (!c.save_trajectory.empty()) io::write_trajectory_csv(c.save_trajectory, traj);

  const KernelConfig kernel{c.bandwidth > 0.0 ? c.bandwidth : median_bandwidth(traj)};
  const auto t0 = std::chrono::steady_clock::now();
  auto gram = std::make_shared<const RMatrix>(
      c.uncentered ? gram_uncentered(traj, kernel, c.common.threads)
                   : gram_centered(traj, kernel, c.common.threads));
  RrrOptions opt;
  opt.centered = !c.uncentered;
  const RrrModel model = fit_rrr(gram, c.gamma, c.rank, opt);
  gram.reset();
  const double fit_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  json summary;
  summary["samples"] = traj.size();
  summary["state_dim"] = traj.state_dim();
  summary["source"] = traj.meta;
  summary["bandwidth"] = kernel.bandwidth;
  summary["rank"] = model.rank();
  summary["gamma"] = c.gamma;
  summary["centered"] = model.centered;
  summary["sigma"] = std::vector<double>(model.sigma_r.data(), model.sigma_r.data() + model.rank());
  summary["normalization_residual"] = model.normalization_residual();
  json eig = json::array();
  const CVector ev = model.eigenvalues();
  for (Index i = 0; i < ev.size(); ++i) eig.push_back(complex_json(ev(i)));
  summary["eigenvalues"] = eig;
  summary["fit_seconds"] = fit_seconds;

  const KoopGrid kg = koop_pseudospectrum_grid(model, grid, c.common.threads);
  io::TextWriter csv((dir / "koop_grid.csv").string());
  csv.line("re,im,mu_h,mu_l2");
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Complex z = grid.point(k);
    csv.row({io::format_double(z.real()), io::format_double(z.imag()),
             io::format_double(kg.mu_h[k]), io::format_double(kg.mu_l2[k])});
  }
  csv.close();

  if (!c.kreiss_eps.empty()) {
    const KoopKreiss kh = koop_kreiss(model, Geometry::rkhs, c.kreiss_eps);
    const KoopKreiss kl = koop_kreiss(model, Geometry::l2, c.kreiss_eps);
    io::TextWriter kcsv((dir / "kreiss.csv").string());
    kcsv.line("eps,rho_h,ratio_h,rho_l2,ratio_l2");
    for (std::size_t i = 0; i < c.kreiss_eps.size(); ++i)
      kcsv.row({io::format_double(c.kreiss_eps[i]), io::format_double(kh.radii[i]),
                io::format_double(kh.ratios[i]), io::format_double(kl.radii[i]),
                io::format_double(kl.ratios[i])});
    kcsv.close();
    summary["kreiss_h"] = {{"kappa", kh.kappa}, {"argmax_eps", number_or_null(kh.argmax_eps)}};
    summary["kreiss_l2"] = {{"kappa", kl.kappa}, {"argmax_eps", number_or_null(kl.argmax_eps)}};
  }
  write_json(dir / "model.json", summary);
  out << summary.dump(2) << "\n";
  return 0;
}

double mean_of(const std::vector<double>& x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double stdev_of(const std::vector<double>& x) {
  if (x.size() < 2) return 0.0;
  const double m = mean_of(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return std::sqrt(s / static_cast<double>(x.size() - 1));
}

int cmd_bench(BenchCmd& c, std::ostream& out) {
  if (c.grid_m < 1 || c.trials < 1) throw PreconditionError("--grid-m and --trials must be positive");
  const fs::path dir = prepare_out_dir(c.common.out_dir);
  const Index side = std::max<Index>(1, static_cast<Index>(std::sqrt(static_cast<double>(c.grid_m))));
  const GridSpec grid{-1.5, 1.5, -1.5, 1.5, side, (c.grid_m + side - 1) / side};
  const Index m = c.grid_m;
  const Index sampled = c.dense_sample > 0 ? std::min(c.dense_sample, m) : m;

  io::TextWriter csv((dir / "bench.csv").string());
  csv.line(
      "d,r,m,trials,dense_points_timed,dense_mean_s,dense_stdev_s,lowrank_mean_s,lowrank_stdev_s,"
      "speedup,log10_speedup");
  json rows = json::array();
  using clock = std::chrono::steady_clock;
  for (Index d : c.dims) {
    for (Index r : c.ranks) {
      if (r < 1 || r >= d) throw PreconditionError("bench needs 1 <= r < d");
      std::vector<double> dense_t, low_t;
      for (int t = 0; t < c.trials; ++t) {
        std::mt19937_64 rng(c.common.seed + 7919 * static_cast<std::uint64_t>(t));
        std::normal_distribution<double> nd(0.0, 1.0);
        CMatrix u(d, r), v(d, r);
        const double s = 1.0 / std::sqrt(static_cast<double>(d));
        for (Index j = 0; j < r; ++j)
          for (Index i = 0; i < d; ++i) {
            u(i, j) = s * Complex(nd(rng), nd(rng));
            v(i, j) = Complex(nd(rng), nd(rng)) / std::sqrt(2.0 * static_cast<double>(r));
          }
        const LowRankFactors f(u, v);
        const CMatrix a = f.dense();

        volatile double sink = 0.0;
        auto t0 = clock::now();
        const GramCache g = GramCache::from_factors(f);
        for (Index k = 0; k < m; ++k) sink = sink + mu(g, grid.point(static_cast<std::size_t>(k)));
        low_t.push_back(std::chrono::duration<double>(clock::now() - t0).count());

        // Dense timing over an evenly spaced subset, scaled to m points.
        t0 = clock::now();
        for (Index k = 0; k < sampled; ++k)
          sink = sink + oracle::dense_sigma_min(a, grid.point(static_cast<std::size_t>(k * m / sampled)));
        const double dt = std::chrono::duration<double>(clock::now() - t0).count();
        dense_t.push_back(dt * static_cast<double>(m) / static_cast<double>(sampled));
      }
      const double speedup = mean_of(dense_t) / mean_of(low_t);
      csv.row({std::to_string(d), std::to_string(r), std::to_string(m), std::to_string(c.trials),
               std::to_string(sampled), io::format_double(mean_of(dense_t)),
               io::format_double(stdev_of(dense_t)), io::format_double(mean_of(low_t)),
               io::format_double(stdev_of(low_t)), io::format_double(speedup),
               io::format_double(std::log10(speedup))});
      rows.push_back({{"d", d}, {"r", r}, {"speedup", speedup}, {"log10_speedup", std::log10(speedup)}});
    }
  }
  csv.close();
  out << rows.dump(2) << "\n";
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Low-rank pseudospectra: grids, stability margins, Koopman models and benchmarks",
               "lowps"};
  app.require_subcommand(1);
  app.config_formatter(std::make_shared<JsonConfig>(&app));
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.set_config("--config", "", "JSON file of option values; command-line flags take precedence");

  GridCmd grid_c;
  auto* grid = app.add_subcommand("grid", "Evaluate mu over a grid and count eps-level membership");
  add_common(grid, grid_c.common);
  add_input(grid, grid_c.input);
  add_grid(grid, grid_c.grid);
  grid->add_option("--mode", grid_c.mode, "exact | truncated | randomized")
      ->check(CLI::IsMember({"exact", "truncated", "randomized"}))
      ->capture_default_str();
  grid->add_option("--rank", grid_c.rank, "Truncation rank l");
  grid->add_option("--sketch", grid_c.sketch, "Sketch size k (randomized; default l + 10)");
  grid->add_option("--delta", grid_c.delta, "Failure probability (randomized)")->capture_default_str();
  grid->add_option("--eps", grid_c.eps, "Levels counted in levels.json")->capture_default_str();
  grid->add_flag("--dense-oracle", grid_c.dense_oracle)->group("");

  StabilityCmd stab_c;
  auto* stab = app.add_subcommand("stability", "Distance to instability, Kreiss constants, radii");
  add_common(stab, stab_c.common);
  add_input(stab, stab_c.input);
  stab->add_option("--task", stab_c.task, "d2i | kreiss | kreiss_c | radius | abscissa")
      ->check(CLI::IsMember({"d2i", "kreiss", "kreiss_c", "radius", "abscissa"}))
      ->capture_default_str();
  stab->add_option("--eps", stab_c.eps, "Level for radius and abscissa")->capture_default_str();
  stab->add_option("--tol", stab_c.tol, "Iteration tolerance")->capture_default_str();

  KoopmanCmd koop_c;
  auto* koop = app.add_subcommand("koopman", "Fit a reduced rank regression transfer operator");
  add_common(koop, koop_c.common);
  add_grid(koop, koop_c.grid);
  koop->add_option("--trajectory", koop_c.trajectory, "Trajectory CSV, one state per row");
  koop->add_option("--simulate", koop_c.simulate, "ou | logistic")
      ->check(CLI::IsMember({"ou", "logistic"}));
  koop->add_option("--n", koop_c.n, "Samples to simulate")->capture_default_str();
  koop->add_option("--drift", koop_c.drift, "OU drift a11 a12 a21 a22")->expected(4)->capture_default_str();
  koop->add_option("--sigma", koop_c.sigma, "OU diffusion")->capture_default_str();
  koop->add_option("--dt", koop_c.dt, "OU sampling step")->capture_default_str();
  koop->add_option("--noise-exponent", koop_c.noise_exponent, "Logistic noise exponent N (even)")
      ->capture_default_str();
  koop->add_option("--bandwidth", koop_c.bandwidth, "Gaussian kernel length scale (0: median heuristic)")
      ->capture_default_str();
  koop->add_option("--rank", koop_c.rank, "Rank r of the estimator")->capture_default_str();
  koop->add_option("--gamma", koop_c.gamma, "Tikhonov regularisation")->capture_default_str();
  koop->add_flag("--uncentered", koop_c.uncentered, "Keep the constant function (no centering)");
  koop->add_option("--kreiss-eps", koop_c.kreiss_eps, "Levels for the Kreiss sweep (writes kreiss.csv)");
  koop->add_option("--save-trajectory", koop_c.save_trajectory, "Also write the trajectory CSV");

  BenchCmd bench_c;
  auto* bench = app.add_subcommand("bench", "Time low-rank against dense grid evaluation");
  add_common(bench, bench_c.common);
  bench->add_option("--dims", bench_c.dims)->capture_default_str();
  bench->add_option("--ranks", bench_c.ranks, "Ranks r")->capture_default_str();
  bench->add_option("--grid-m", bench_c.grid_m, "Grid points")->capture_default_str();
  bench->add_option("--trials", bench_c.trials, "Repetitions per timing")->capture_default_str();
  bench->add_option("--dense-sample", bench_c.dense_sample,
                    "Dense points actually timed, scaled to the grid (0: all)")
      ->capture_default_str();

  // Lets `lowps <command> --config file` reach the top-level option.
  for (auto* sub : {grid, stab, koop, bench}) {
    sub->fallthrough();
    sub->allow_config_extras(CLI::config_extras_mode::error);
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::FileError& e) {
    err << "lowps: " << e.what() << "\n";
    return static_cast<int>(ErrorKind::io);
  } catch (const CLI::ParseError& e) {
    // Subcommand help arrives here too.
    if (e.get_exit_code() == 0) {
      for (auto* sub : app.get_subcommands()) out << sub->help();
      return 0;
    }
    err << "lowps: " << e.what() << "\n";
    return static_cast<int>(ErrorKind::parse);
  } catch (const Error& e) {
    err << "lowps: " << e.what() << "\n";
    return e.exit_code();
  }

  try {
    if (grid->parsed()) return cmd_grid(grid_c, out);
    if (stab->parsed()) return cmd_stability(stab_c, out);
    if (koop->parsed()) return cmd_koopman(koop_c, out);
    return cmd_bench(bench_c, out);
  } catch (const Error& e) {
    err << "lowps: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::bad_alloc&) {
    err << "lowps: out of memory\n";
    return static_cast<int>(ErrorKind::cap_exceeded);
  }
}

}  // namespace lowps::cli
