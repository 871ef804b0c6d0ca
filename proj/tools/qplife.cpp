// qplife: command-line front end.
//
//   qplife <fgr|ladder|melonic|classical|fit|collapse|verify> [flags]
//
// Every compute subcommand writes <out>/<name>.csv plus a <name>.csv.json
// sidecar. Exit codes: 0 ok, 1 unexpected error, 2 invalid input, 3 numerical failure.

#include <omp.h>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "qplife/analysis.hpp"
#include "qplife/classical.hpp"
#include "qplife/error.hpp"
#include "qplife/fgr.hpp"
#include "qplife/io.hpp"
#include "qplife/ladder.hpp"
#include "qplife/melonic.hpp"
#include "qplife/verify.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace qplife;

namespace {

struct Common {
  std::string config;
  std::string out = ".";
  std::string name;
  int threads = 0;
};

std::string normalize(std::string s) {
  std::replace(s.begin(), s.end(), '-', '_');
  return s;
}

// Fill options that were not given on the command line from the config file.
void apply_config(CLI::App* sub, const std::string& path) {
  if (path.empty()) return;
  auto cfg = io::load_config(path);
  for (CLI::Option* opt : sub->get_options()) {
    const std::string key = normalize(opt->get_single_name());
    auto it = cfg.find(key);
    if (it == cfg.end()) continue;
    if (opt->count() == 0) {
      opt->add_result(it->second);
      opt->run_callback();
    }
    cfg.erase(it);
  }
  cfg.erase("config");
  if (!cfg.empty()) throw InvalidInput("config: unknown key '" + cfg.begin()->first + "'");
}

void set_threads(int requested) {
  int n = requested;
  if (n <= 0) {
    if (const char* env = std::getenv("QPLIFE_THREADS")) {
      try {
        n = std::stoi(env);
      } catch (const std::exception&) {
        throw InvalidInput("QPLIFE_THREADS must be an integer");
      }
      if (n <= 0) throw InvalidInput("QPLIFE_THREADS must be positive");
    }
  }
  if (n > 0) omp_set_num_threads(n);
}

template <class E>
E pick(const std::string& value, std::initializer_list<std::pair<const char*, E>> choices,
       const char* what) {
  for (const auto& [k, v] : choices)
    if (value == k) return v;
  throw InvalidInput(std::string("unknown ") + what + " '" + value + "'");
}

std::string tag_number(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

fs::path output_path(const Common& c, const std::string& fallback) {
  return fs::path(c.out) / ((c.name.empty() ? fallback : c.name) + ".csv");
}

void emit(const fs::path& csv, const io::Table& table, const std::string& command,
          const json& config, double wall) {
  io::write_csv(csv, table);
  io::write_metadata(csv, io::make_metadata(command, config, wall));
  std::cout << "wrote " << csv.string() << '\n';
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const char* vertex_name(fgr::Vertex v) {
  switch (v) {
    case fgr::Vertex::Antisymmetric: return "antisymmetric";
    case fgr::Vertex::Symmetric: return "symmetric";
    case fgr::Vertex::Constant: return "constant";
  }
  return "?";
}

json law_json(const analysis::ScalingLaw& l) {
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  return {{"model", analysis::to_string(l.model)}, {"a", num(l.a)}, {"b", num(l.b)},
          {"ssr", l.ssr}, {"converged", l.converged}, {"unidentifiable", l.unidentifiable},
          {"degenerate", l.degenerate}};
}

// |value| series from a melonic or classical CSV; Delta from its sidecar.
analysis::Series load_series(const std::string& path) {
  const auto t = io::read_csv(path);
  analysis::Series s;
  std::string re = "re_G", im = "im_G";
  if (std::find(t.header.begin(), t.header.end(), "re_C") != t.header.end()) re = "re_C", im = "im_C";
  const auto tt = t.values("t"), kk = t.values("k"), r = t.values(re), i = t.values(im);
  // first recorded momentum only
  for (std::size_t j = 0; j < r.size(); ++j) {
    if (kk[j] != kk.front()) continue;
    s.t.push_back(tt[j]);
    s.value.push_back(std::hypot(r[j], i[j]));
  }
  std::ifstream side(path + ".json");
  if (!side) throw InvalidInput("missing sidecar " + path + ".json");
  json meta;
  try {
    side >> meta;
  } catch (const json::exception& e) {
    throw InvalidInput(path + ".json: " + e.what());
  }
  io::validate_metadata(meta);
  if (!meta["config"].contains("delta")) throw InvalidInput(path + ".json: no delta in config");
  s.delta = meta["config"]["delta"].get<double>();
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qplife: quasiparticle lifetimes of weakly interacting 1d lattice models"};
  app.set_help_flag("--help", "Print this help message and exit");
  app.require_subcommand(1);
  app.set_version_flag("--version", io::version_string());
  Common common;
  auto add_common = [&](CLI::App* s) {
    s->add_option("--config", common.config, "key=value or JSON config file");
    s->add_option("--out", common.out, "output directory");
    s->add_option("--name", common.name, "output file stem");
    s->add_option("--threads", common.threads, "worker threads (fallback: QPLIFE_THREADS)");
  };

  // fgr
  fgr::FgrRequest fr;
  std::vector<double> etas{1e-1, 5e-2, 2e-2, 1e-2, 5e-3, 2e-3, 1e-3};
  std::string stats = "fermion", vertex, dispersion_file, quadrature = "cell";
  auto* fgr_cmd = app.add_subcommand("fgr", "Golden Rule rate versus broadening eta");
  add_common(fgr_cmd);
  fgr_cmd->add_option("--k", fr.k);
  fgr_cmd->add_option("--delta", fr.delta);
  fgr_cmd->add_option("--eta", etas)->delimiter(',');
  fgr_cmd->add_option("--L", fr.n_sites);
  fgr_cmd->add_option("--statistics", stats, "fermion | boson");
  fgr_cmd->add_option("--beta", fr.beta, "inverse temperature, 0 = infinite");
  fgr_cmd->add_option("--mu", fr.mu);
  fgr_cmd->add_option("--vertex", vertex, "antisymmetric | symmetric | constant");
  fgr_cmd->add_option("--dispersion", dispersion_file, "two-column table k eps");
  fgr_cmd->add_option("--quadrature", quadrature, "cell | riemann");

  // ladder
  double lk = 0.0;
  std::vector<double> ldeltas{1e-3};
  ladder::QuadratureOptions lq;
  auto* ladder_cmd = app.add_subcommand("ladder", "Resummed ladder decay rate");
  add_common(ladder_cmd);
  ladder_cmd->add_option("--k", lk);
  ladder_cmd->add_option("--delta", ldeltas)->delimiter(',');
  ladder_cmd->add_option("--resolution", lq.resolution);
  ladder_cmd->add_option("--order", lq.order);

  // melonic
  melonic::SolverConfig mc;
  std::string mode = "melonic", frame = "rotating", integrator = "rectangle", kpath = "fft",
              observable = "auto";
  auto* mel_cmd = app.add_subcommand("melonic", "Self-consistent memory-matrix evolution");
  add_common(mel_cmd);
  mel_cmd->add_option("--L", mc.n_sites);
  mel_cmd->add_option("--dt", mc.dt);
  mel_cmd->add_option("--tmax", mc.t_max);
  mel_cmd->add_option("--delta", mc.delta);
  mel_cmd->add_option("--h", mc.h);
  mel_cmd->add_option("--k", mc.observe.k);
  mel_cmd->add_option("--observable", observable, "auto | single-site | quasiparticle");
  mel_cmd->add_option("--mode", mode, "melonic | fgr-frozen");
  mel_cmd->add_option("--frame", frame, "rotating | lab");
  mel_cmd->add_option("--integrator", integrator, "rectangle | trapezoid");
  mel_cmd->add_option("--kernel", kpath, "fft | direct");
  mel_cmd->add_option("--stop-ratio", mc.stop_ratio);
  mel_cmd->add_option("--kernel-cutoff", mc.kernel_cutoff);

  // classical
  classical::EnsembleSpec es;
  auto* cl_cmd = app.add_subcommand("classical", "Classical Floquet autocorrelator");
  add_common(cl_cmd);
  cl_cmd->add_option("--L", es.n_sites);
  cl_cmd->add_option("--delta", es.delta);
  cl_cmd->add_option("--samples", es.n_samples);
  cl_cmd->add_option("--seed", es.seed);
  cl_cmd->add_option("--steps", es.n_steps);
  cl_cmd->add_option("--k", es.ks)->delimiter(',');
  cl_cmd->add_option("--batches", es.n_batches);
  cl_cmd->add_option("--origins", es.n_origins);
  cl_cmd->add_option("--origin-stride", es.origin_stride);

  // fit
  std::string rates_file;
  std::vector<std::string> series_files;
  analysis::WindowPolicy window;
  auto* fit_cmd = app.add_subcommand("fit", "Rate extraction and scaling-law comparison");
  add_common(fit_cmd);
  fit_cmd->add_option("--rates", rates_file, "CSV with Delta and rate columns");
  fit_cmd->add_option("--series", series_files, "melonic/classical CSV outputs")->delimiter(',');
  fit_cmd->add_option("--window-upper", window.upper);
  fit_cmd->add_option("--window-lower", window.lower);

  // collapse
  std::string scale = "both";
  auto* col_cmd = app.add_subcommand("collapse", "Rescaled-time tables and collapse metric");
  add_common(col_cmd);
  col_cmd->add_option("--series", series_files)->delimiter(',')->required();
  col_cmd->add_option("--scale", scale, "log | quadratic | both");

  auto* ver_cmd = app.add_subcommand("verify", "Run the built-in oracle suite");
  add_common(ver_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    apply_config(sub, common.config);
    set_threads(common.threads);
    const auto t0 = std::chrono::steady_clock::now();

    if (sub == fgr_cmd) {
      fr.quadrature = pick<fgr::Quadrature>(quadrature, {{"cell", fgr::Quadrature::LinearCell},
                                  {"riemann", fgr::Quadrature::Riemann}}, "quadrature");
      fr.statistics = pick<fgr::Statistics>(stats, {{"fermion", fgr::Statistics::Fermion},
                                   {"boson", fgr::Statistics::Boson}}, "statistics");
      if (!vertex.empty())
        fr.vertex = pick<fgr::Vertex>(vertex, {{"antisymmetric", fgr::Vertex::Antisymmetric},
                                  {"symmetric", fgr::Vertex::Symmetric},
                                  {"constant", fgr::Vertex::Constant}}, "vertex");
      if (!dispersion_file.empty()) {
        std::ifstream in(dispersion_file);
        if (!in) throw InvalidInput("cannot read " + dispersion_file);
        fr.dispersion = Dispersion::parse_table(in);
      }
      const auto ls = fgr::log_slope(fr, etas);
      io::Table t{{"k", "Delta", "eta", "rate", "c0", "c1", "r2"}, {}};
      for (std::size_t i = 0; i < ls.etas.size(); ++i)
        t.rows.push_back({fr.k, fr.delta, ls.etas[i], ls.rates[i], ls.c0, ls.c1, ls.r2});
      const json cfg{{"k", fr.k}, {"delta", fr.delta}, {"eta", etas}, {"L", fr.n_sites},
                     {"statistics", stats}, {"beta", fr.beta}, {"mu", fr.mu},
                     {"vertex", vertex_name(fr.effective_vertex())},
                     {"dispersion", fr.dispersion.tag()}, {"quadrature", quadrature}};
      emit(output_path(common, "fgr_k" + tag_number(fr.k) + "_D" + tag_number(fr.delta)), t,
           "fgr", cfg, seconds_since(t0));
      std::cout << "c0 = " << ls.c0 << "  c1 = " << ls.c1 << "  R^2 = " << ls.r2 << '\n';
    } else if (sub == ladder_cmd) {
      double alpha = std::nan(""), gamma = std::nan("");
      if (ldeltas.size() >= 3) {
        const double lo = *std::min_element(ldeltas.begin(), ldeltas.end());
        const double hi = *std::max_element(ldeltas.begin(), ldeltas.end());
        if (hi >= 1e3 * lo) {
          const auto as = ladder::ladder_asymptotics(lk, ldeltas, lq);
          alpha = as.alpha;
          gamma = as.gamma;
        }
      }
      io::Table t{{"k", "Delta", "rate", "alpha", "gamma"}, {}};
      for (double d : ldeltas) {
        const auto r = ladder::ladder_rate(lk, d, lq);
        t.rows.push_back({lk, d, r.rate, alpha, gamma});
      }
      const json cfg{{"k", lk}, {"delta", ldeltas}, {"resolution", lq.resolution},
                     {"order", lq.order}};
      emit(output_path(common, "ladder_k" + tag_number(lk)), t, "ladder", cfg,
           seconds_since(t0));
    } else if (sub == mel_cmd) {
      mc.mode = pick<melonic::KernelMode>(mode, {{"melonic", melonic::KernelMode::SelfConsistent},
                            {"self-consistent", melonic::KernelMode::SelfConsistent},
                            {"fgr-frozen", melonic::KernelMode::FgrFrozen}}, "mode");
      mc.frame = pick<melonic::Frame>(frame, {{"rotating", melonic::Frame::Rotating},
                              {"lab", melonic::Frame::Lab}}, "frame");
      mc.integrator = pick<melonic::Integrator>(integrator, {{"rectangle", melonic::Integrator::Rectangle},
                                        {"trapezoid", melonic::Integrator::Trapezoid}},
                           "integrator");
      mc.kernel_path = pick<melonic::KernelPath>(kpath, {{"fft", melonic::KernelPath::Fft},
                                    {"direct", melonic::KernelPath::Direct}}, "kernel path");
      if (observable == "auto")
        mc.observe.kind = mc.h == 0.0 ? melonic::Observable::Kind::SingleSite
                                      : melonic::Observable::Kind::Quasiparticle;
      else
        mc.observe.kind = pick<melonic::Observable::Kind>(observable, {{"single-site", melonic::Observable::Kind::SingleSite},
                                            {"quasiparticle",
                                             melonic::Observable::Kind::Quasiparticle}},
                               "observable");
      const auto r = melonic::solve(mc);
      io::Table t{{"t", "k", "re_G", "im_G", "abs_Sigma"}, {}};
      for (std::size_t m = 0; m < r.t.size(); ++m)
        t.rows.push_back({r.t[m], mc.observe.k, r.green[m].real(), r.green[m].imag(),
                          m < r.sigma.size() ? r.sigma[m] : std::nan("")});
      const json cfg{{"L", mc.n_sites}, {"dt", mc.dt}, {"tmax", mc.t_max},
                     {"delta", mc.delta}, {"h", mc.h}, {"k", mc.observe.k},
                     {"observable", mc.observe.kind == melonic::Observable::Kind::SingleSite
                                        ? "single-site"
                                        : "quasiparticle"},
                     {"mode", melonic::to_string(mc.mode)}, {"frame", melonic::to_string(mc.frame)},
                     {"integrator", melonic::to_string(mc.integrator)}, {"kernel", kpath},
                     {"stop_ratio", mc.stop_ratio}, {"kernel_cutoff", mc.kernel_cutoff}};
      emit(output_path(common, "melonic_L" + std::to_string(mc.n_sites) + "_D" +
                                   tag_number(mc.delta) + "_h" + tag_number(mc.h) + "_k" +
                                   tag_number(mc.observe.k)),
           t, "melonic", cfg, r.wall_seconds);
    } else if (sub == cl_cmd) {
      const auto r = classical::autocorrelator(es);
      io::Table t{{"t", "k", "re_C", "im_C", "stderr"}, {}};
      for (std::size_t i = 0; i < r.k.size(); ++i)
        for (std::size_t m = 0; m < r.t.size(); ++m)
          t.rows.push_back({r.t[m], r.k[i], r.c[i][m].real(), r.c[i][m].imag(),
                            r.stderr_abs[i][m]});
      const json cfg{{"L", es.n_sites}, {"delta", es.delta}, {"samples", es.n_samples},
                     {"seed", es.seed}, {"steps", es.n_steps}, {"k", r.k},
                     {"batches", es.n_batches}, {"origins", es.n_origins},
                     {"origin_stride", es.origin_stride}, {"low_precision", r.low_precision}};
      emit(output_path(common, "classical_L" + std::to_string(es.n_sites) + "_D" +
                                   tag_number(es.delta) + "_s" + std::to_string(es.seed)),
           t, "classical", cfg, r.wall_seconds);
      if (r.low_precision) std::cout << "warning: low-precision estimate inside the fit window\n";
    } else if (sub == fit_cmd) {
      std::vector<analysis::RatePoint> pts;
      io::Table rates{{"Delta", "rate", "error", "r2", "t_begin", "t_end"}, {}};
      if (!rates_file.empty()) {
        const auto t = io::read_csv(rates_file);
        const auto d = t.values("Delta"), r = t.values("rate");
        for (std::size_t i = 0; i < d.size(); ++i) pts.push_back({d[i], r[i]});
      }
      for (const auto& f : series_files) {
        const auto s = load_series(f);
        const auto rf = analysis::extract_rate(s.t, s.value, window);
        pts.push_back({s.delta, rf.rate});
        rates.rows.push_back({s.delta, rf.rate, rf.error, rf.r2, rf.t_begin, rf.t_end});
      }
      if (pts.empty()) throw InvalidInput("fit: give --rates or --series");
      const auto stem = fs::path(common.out) / (common.name.empty() ? "fit" : common.name);
      if (pts.size() < 5 && rates_file.empty()) {
        const json cfg{{"series", series_files}, {"window_upper", window.upper},
                       {"window_lower", window.lower}};
        emit(stem.string() + "_rates.csv", rates, "fit", cfg, seconds_since(t0));
        std::cout << "scaling fit skipped: it needs at least 5 Delta values\n";
        return 0;
      }
      const auto cmp = analysis::fit_scaling(pts);
      io::Table laws{{"model", "a", "b", "ssr"}, {}};
      laws.rows.push_back({0.0, cmp.quadratic.a, std::nan(""), cmp.quadratic.ssr});
      laws.rows.push_back({1.0, cmp.log_enhanced.a, cmp.log_enhanced.b, cmp.log_enhanced.ssr});
      const json cfg{{"rates", rates_file}, {"series", series_files},
                     {"window_upper", window.upper}, {"window_lower", window.lower},
                     {"quadratic", law_json(cmp.quadratic)},
                     {"log_enhanced", law_json(cmp.log_enhanced)},
                     {"preferred", analysis::to_string(cmp.preferred)}};
      if (!rates.rows.empty()) emit(stem.string() + "_rates.csv", rates, "fit", cfg, seconds_since(t0));
      emit(stem.string() + "_laws.csv", laws, "fit", cfg, seconds_since(t0));
      std::cout << "quadratic: c = " << cmp.quadratic.a << ", ssr = " << cmp.quadratic.ssr << '\n'
                << "log-enhanced: a = " << cmp.log_enhanced.a << ", b = " << cmp.log_enhanced.b
                << ", ssr = " << cmp.log_enhanced.ssr << '\n'
                << "preferred: " << analysis::to_string(cmp.preferred) << '\n';
    } else if (sub == col_cmd) {
      std::vector<analysis::Series> series;
      for (const auto& f : series_files) series.push_back(load_series(f));
      std::vector<std::pair<std::string, analysis::TimeScale>> scales;
      if (scale == "log" || scale == "both")
        scales.emplace_back("log", analysis::TimeScale::DeltaSquaredLog);
      if (scale == "quadratic" || scale == "both")
        scales.emplace_back("quadratic", analysis::TimeScale::DeltaSquared);
      if (scales.empty()) throw InvalidInput("unknown scale '" + scale + "'");
      json metrics;
      for (const auto& [label, sc] : scales) {
        const auto c = analysis::collapse_table(series, sc);
        io::Table t{{"Delta", "scaled_t", "value"}, {}};
        for (const auto& r : c.rows) t.rows.push_back({r.delta, r.scaled_t, r.value});
        metrics[label] = c.metric;
        const json cfg{{"series", series_files}, {"scale", label}, {"metric", c.metric}};
        const auto stem = fs::path(common.out) / (common.name.empty() ? "collapse" : common.name);
        emit(stem.string() + "_" + label + ".csv", t, "collapse", cfg, seconds_since(t0));
        std::cout << label << " collapse metric: " << c.metric << '\n';
      }
    } else if (sub == ver_cmd) {
      bool all = true;
      for (const auto& c : verify::run_all()) {
        std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << "  (value " << c.value
                  << ", tolerance " << c.tolerance << ")";
        if (!c.detail.empty()) std::cout << "  " << c.detail;
        std::cout << '\n';
        all = all && c.passed;
      }
      return all ? 0 : 3;
    }
    return 0;
  } catch (const InvalidInput& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalFailure& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "unexpected failure: " << e.what() << '\n';
    return 1;
  }
}
