#include "rlbd/trigger.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <Eigen/Dense>

#include "rlbd/tuning.hpp"

namespace rlbd {

void Trigger::validate() const {
  if (rows < 1 || cols < 1) {
    throw std::invalid_argument("trigger: patch must be at least 1x1");
  }
  if (row < 0 || col < 0) {
    throw std::invalid_argument("trigger: anchor must be non-negative");
  }
  if (patch.size() != static_cast<size_t>(rows) * cols) {
    throw std::invalid_argument("trigger: patch has wrong shape");
  }
  for (double v : patch) {
    if (!(v >= -1.0 && v <= 1.0)) {
      throw std::invalid_argument("trigger: patch values must lie in [-1,1]");
    }
  }
}

Trigger make_uniform_trigger(int row, int col, int rows, int cols,
                             double value) {
  Trigger t;
  t.row = row;
  t.col = col;
  t.rows = rows;
  t.cols = cols;
  t.patch.assign(static_cast<size_t>(rows) * cols, value);
  t.validate();
  return t;
}

Trigger random_trigger(int row, int col, int rows, int cols, Rng& rng,
                       double magnitude_lo, double magnitude_hi) {
  Trigger t;
  t.row = row;
  t.col = col;
  t.rows = rows;
  t.cols = cols;
  t.patch.resize(static_cast<size_t>(rows) * cols);
  for (double& v : t.patch) {
    double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
    v = sign * rng.uniform(magnitude_lo, magnitude_hi);
  }
  t.validate();
  return t;
}

void write_trigger(const Trigger& t, const std::string& path) {
  t.validate();
  std::ofstream f(path);
  if (!f) throw std::runtime_error("write_trigger: cannot open " + path);
  f << "trigger-format 1\n";
  f << "row " << t.row << "\n";
  f << "col " << t.col << "\n";
  f << "rows " << t.rows << "\n";
  f << "cols " << t.cols << "\n";
  f << "provenance " << t.provenance << "\n";
  f << "tuning_seed " << t.tuning_seed << "\n";
  f << "patch\n";
  char buf[40];
  for (int r = 0; r < t.rows; ++r) {
    for (int c = 0; c < t.cols; ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", t.at(r, c));
      f << (c ? " " : "") << buf;
    }
    f << "\n";
  }
  if (!f) throw std::runtime_error("write_trigger: write failed for " + path);
}

Trigger read_trigger(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("read_trigger: cannot open " + path);
  auto expect = [&f, &path](const std::string& kw) {
    std::string tok;
    if (!(f >> tok) || tok != kw) {
      throw std::invalid_argument("read_trigger: expected '" + kw + "' in " +
                                  path);
    }
  };
  expect("trigger-format");
  int version = 0;
  if (!(f >> version) || version != 1) {
    throw std::invalid_argument("read_trigger: unsupported format version");
  }
  Trigger t;
  expect("row");
  f >> t.row;
  expect("col");
  f >> t.col;
  expect("rows");
  f >> t.rows;
  expect("cols");
  f >> t.cols;
  expect("provenance");
  f >> t.provenance;
  expect("tuning_seed");
  f >> t.tuning_seed;
  if (!f) throw std::invalid_argument("read_trigger: malformed header");
  expect("patch");
  if (t.rows < 1 || t.cols < 1) {
    throw std::invalid_argument("read_trigger: bad patch shape");
  }
  t.patch.resize(static_cast<size_t>(t.rows) * t.cols);
  for (double& v : t.patch) {
    if (!(f >> v)) {
      throw std::invalid_argument("read_trigger: truncated patch data");
    }
  }
  t.validate();
  return t;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("cosine: vector sizes differ");
  }
  if (a == b) return 1.0;
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

namespace {

void check_trigger_fits(const Trigger& t, const Env& env) {
  t.validate();
  if (t.row + t.rows > env.obs_rows || t.col + t.cols > env.obs_cols) {
    throw std::invalid_argument("tuning: trigger does not fit the grid");
  }
}

std::vector<std::vector<double>> clean_gradients(
    const PolicyModel& model, const Env& env, const std::vector<int>& samples,
    int target_action) {
  std::vector<std::vector<double>> out;
  out.reserve(samples.size());
  for (int s : samples) {
    out.push_back(
        model.sample_gradient(env.observe(s).pixels, target_action, 1.0, 0.0));
  }
  return out;
}

std::vector<std::vector<double>> poisoned_gradients(
    const PolicyModel& model, const Env& env, const std::vector<int>& samples,
    const Trigger& trigger, int target_action) {
  std::vector<std::vector<double>> out;
  out.reserve(samples.size());
  for (int s : samples) {
    GridObservation poisoned = inject_trigger(env.observe(s), trigger);
    out.push_back(
        model.sample_gradient(poisoned.pixels, target_action, 1.0, 0.0));
  }
  return out;
}

double alignment_against(const std::vector<std::vector<double>>& clean,
                         const PolicyModel& model, const Env& env,
                         const std::vector<int>& samples,
                         const Trigger& trigger, int target_action) {
  double total = 0.0;
  for (size_t i = 0; i < samples.size(); ++i) {
    GridObservation poisoned =
        inject_trigger(env.observe(samples[i]), trigger);
    std::vector<double> g =
        model.sample_gradient(poisoned.pixels, target_action, 1.0, 0.0);
    total += cosine(clean[i], g);
  }
  return total / static_cast<double>(samples.size());
}

// diagnostic MI between the clean and poisoned gradient populations
void fill_mi_diagnostic(TuningReport& report, const PolicyModel& model,
                        const Env& env, const std::vector<int>& samples,
                        const Trigger& trigger, int target_action,
                        std::uint64_t seed) {
  const int n = static_cast<int>(samples.size());
  if (n < 3) return;  // the estimator needs sketch_dim + 2 <= n
  const int d = std::min(16, n - 2);
  std::vector<std::vector<double>> gc =
      clean_gradients(model, env, samples, target_action);
  std::vector<std::vector<double>> gp =
      poisoned_gradients(model, env, samples, trigger, target_action);
  Rng rng(derive_seed(seed, "mi-diagnostic"));
  MiEstimate est = estimate_mi(gc, gp, d, rng);
  report.final_mi_estimate = est.nats;
  report.mi_ridge_applied = est.ridged;
}

Trigger mutate_trigger(const Trigger& cur, const Env& env, Rng& rng) {
  Trigger cand = cur;
  if (rng.uniform() < 0.3) {
    int dr = 0, dc = 0;
    if (rng.uniform() < 0.5) {
      dr = rng.uniform() < 0.5 ? -1 : 1;
    } else {
      dc = rng.uniform() < 0.5 ? -1 : 1;
    }
    cand.row = std::clamp(cur.row + dr, 0, env.obs_rows - cur.rows);
    cand.col = std::clamp(cur.col + dc, 0, env.obs_cols - cur.cols);
  } else {
    const int idx = rng.uniform_int(static_cast<int>(cand.patch.size()));
    const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
    cand.patch[idx] = sign * rng.uniform(0.5, 1.0);
  }
  return cand;
}

}  // namespace

double gradient_alignment(const PolicyModel& model, const Env& env,
                          const std::vector<int>& samples,
                          const Trigger& trigger, int target_action) {
  if (samples.empty()) {
    throw std::invalid_argument("alignment: sample set is empty");
  }
  check_trigger_fits(trigger, env);
  std::vector<std::vector<double>> clean =
      clean_gradients(model, env, samples, target_action);
  return alignment_against(clean, model, env, samples, trigger,
                           target_action);
}

TuneResult tune_trigger_mi(const Env& env, const PolicyModel& snapshot,
                           const std::vector<int>& samples,
                           const Trigger& init, int target_action,
                           int generations, int lambda, std::uint64_t seed) {
  if (samples.empty()) {
    throw std::invalid_argument("tune-mi: sample set is empty");
  }
  if (generations < 1 || lambda < 1) {
    throw std::invalid_argument("tune-mi: budget must be at least 1");
  }
  check_trigger_fits(init, env);

  Rng rng(derive_seed(seed, "mi-search"));
  std::vector<std::vector<double>> clean =
      clean_gradients(snapshot, env, samples, target_action);

  Trigger cur = init;
  double cur_j =
      alignment_against(clean, snapshot, env, samples, cur, target_action);

  TuneResult res;
  res.report.seed = seed;
  res.report.iterations = generations;
  res.report.objective_trace.push_back(-cur_j);
  for (int gen = 0; gen < generations; ++gen) {
    Trigger best_cand;
    double best_j = cur_j;
    bool found = false;
    for (int i = 0; i < lambda; ++i) {
      Trigger cand = mutate_trigger(cur, env, rng);
      double j = alignment_against(clean, snapshot, env, samples, cand,
                                   target_action);
      if (j > best_j) {  // strict improvement only
        best_j = j;
        best_cand = cand;
        found = true;
      }
    }
    if (found) {
      cur = best_cand;
      cur_j = best_j;
    }
    res.report.objective_trace.push_back(-cur_j);
  }

  cur.provenance = "tuned-MI";
  cur.tuning_seed = seed;
  res.report.final_alignment = cur_j;
  fill_mi_diagnostic(res.report, snapshot, env, samples, cur, target_action,
                     seed);
  res.trigger = std::move(cur);
  return res;
}

TuneResult tune_trigger_ce(const Env& env, const PolicyModel& snapshot,
                           const std::vector<int>& samples,
                           const Trigger& init, int target_action,
                           double step_size, int iterations) {
  if (samples.empty()) {
    throw std::invalid_argument("tune-ce: sample set is empty");
  }
  if (iterations < 1 || !(step_size > 0.0)) {
    throw std::invalid_argument("tune-ce: bad step size or iteration count");
  }
  check_trigger_fits(init, env);

  const double n = static_cast<double>(samples.size());
  auto loss_of = [&](const Trigger& t) {
    double total = 0.0;
    for (int s : samples) {
      GridObservation poisoned = inject_trigger(env.observe(s), t);
      total += snapshot.action_nll(poisoned.pixels, target_action);
    }
    double loss = total / n;
    if (!std::isfinite(loss)) {
      throw std::runtime_error("tune-ce: non-finite loss");
    }
    return loss;
  };

  Trigger cur = init;
  double cur_loss = loss_of(cur);

  TuneResult res;
  res.report.objective_trace.push_back(cur_loss);
  double step = step_size;
  int done = 0;
  for (int it = 0; it < iterations && step >= 1e-12; ++it, ++done) {
    // mean input-gradient at the patch cells; saturated pixels contribute 0
    std::vector<double> grad(cur.patch.size(), 0.0);
    for (int s : samples) {
      GridObservation poisoned = inject_trigger(env.observe(s), cur);
      std::vector<double> g =
          snapshot.input_gradient(poisoned.pixels, target_action);
      for (int r = 0; r < cur.rows; ++r) {
        for (int c = 0; c < cur.cols; ++c) {
          const double pix = poisoned.at(cur.row + r, cur.col + c);
          if (pix > 0.0 && pix < 1.0) {
            grad[r * cur.cols + c] +=
                g[(cur.row + r) * poisoned.cols + (cur.col + c)];
          }
        }
      }
    }
    for (double& v : grad) v /= n;

    // halve the step until the proposal stops increasing the loss
    Trigger cand = cur;
    double cand_loss = cur_loss;
    while (step >= 1e-12) {
      cand = cur;
      for (size_t i = 0; i < cand.patch.size(); ++i) {
        cand.patch[i] =
            std::clamp(cand.patch[i] - step * grad[i], -1.0, 1.0);
      }
      cand_loss = loss_of(cand);
      if (cand_loss <= cur_loss) break;
      step *= 0.5;
    }
    if (cand_loss <= cur_loss) {
      cur = cand;
      cur_loss = cand_loss;
    }
    res.report.objective_trace.push_back(cur_loss);
  }
  res.report.iterations = done;

  cur.provenance = "tuned-CE";
  cur.tuning_seed = 0;
  res.report.final_alignment =
      gradient_alignment(snapshot, env, samples, cur, target_action);
  fill_mi_diagnostic(res.report, snapshot, env, samples, cur, target_action,
                     0);
  res.trigger = std::move(cur);
  return res;
}

MiEstimate estimate_mi(const std::vector<std::vector<double>>& x,
                       const std::vector<std::vector<double>>& y,
                       int sketch_dim, Rng& rng) {
  const int n = static_cast<int>(x.size());
  if (y.size() != x.size()) {
    throw std::invalid_argument("estimate_mi: sets must be paired");
  }
  if (sketch_dim < 1) {
    throw std::invalid_argument("estimate_mi: sketch dimension must be >= 1");
  }
  if (n < sketch_dim + 2) {
    throw std::invalid_argument(
        "estimate_mi: need at least sketch_dim + 2 samples");
  }
  const int dim_x = static_cast<int>(x[0].size());
  const int dim_y = static_cast<int>(y[0].size());
  if (dim_x < 1 || dim_y < 1) {
    throw std::invalid_argument("estimate_mi: empty vectors");
  }

  // one shared seeded projection; reused for both sets so paired structure
  // survives the sketch (padded with independent columns if dims differ)
  const int dim = std::max(dim_x, dim_y);
  Eigen::MatrixXd proj(sketch_dim, dim);
  for (int i = 0; i < sketch_dim; ++i) {
    for (int j = 0; j < dim; ++j) {
      proj(i, j) = rng.normal() / std::sqrt(static_cast<double>(dim));
    }
  }

  Eigen::MatrixXd xs(n, sketch_dim), ys(n, sketch_dim);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(x[i].size()) != dim_x ||
        static_cast<int>(y[i].size()) != dim_y) {
      throw std::invalid_argument("estimate_mi: ragged input");
    }
    for (int k = 0; k < sketch_dim; ++k) {
      double sx = 0.0, sy = 0.0;
      for (int j = 0; j < dim_x; ++j) sx += proj(k, j) * x[i][j];
      for (int j = 0; j < dim_y; ++j) sy += proj(k, j) * y[i][j];
      xs(i, k) = sx;
      ys(i, k) = sy;
    }
  }
  xs.rowwise() -= xs.colwise().mean();
  ys.rowwise() -= ys.colwise().mean();

  const double denom = static_cast<double>(n - 1);
  Eigen::MatrixXd sxx = xs.transpose() * xs / denom;
  Eigen::MatrixXd syy = ys.transpose() * ys / denom;
  Eigen::MatrixXd sxy = xs.transpose() * ys / denom;

  MiEstimate out;
  double ridge = 0.0;
  Eigen::LLT<Eigen::MatrixXd> lx, ly;
  for (int attempt = 0; attempt < 12; ++attempt) {
    Eigen::MatrixXd rx = sxx, ry = syy;
    if (ridge > 0.0) {
      rx += ridge * Eigen::MatrixXd::Identity(sketch_dim, sketch_dim);
      ry += ridge * Eigen::MatrixXd::Identity(sketch_dim, sketch_dim);
    }
    lx.compute(rx);
    ly.compute(ry);
    if (lx.info() == Eigen::Success && ly.info() == Eigen::Success) break;
    out.ridged = true;
    ridge = ridge == 0.0 ? 1e-8 : ridge * 10.0;
  }
  if (lx.info() != Eigen::Success || ly.info() != Eigen::Success) {
    throw std::runtime_error("estimate_mi: covariance failed to factorize");
  }

  // M = Lx^-1 Sxy Ly^-T, canonical correlations = singular values of M
  Eigen::MatrixXd a =
      lx.matrixL().solve(sxy);  // Lx^-1 Sxy
  Eigen::MatrixXd m =
      ly.matrixL().solve(a.transpose()).transpose();  // ... Ly^-T
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  double mi = 0.0;
  for (int i = 0; i < svd.singularValues().size(); ++i) {
    double rho = std::min(svd.singularValues()[i], 1.0 - 1e-12);
    mi += -0.5 * std::log(1.0 - rho * rho);
  }
  out.nats = std::max(0.0, mi);
  return out;
}

}  // namespace rlbd
