#include "rlbd/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rlbd {

namespace {

constexpr double kRowSumTol = 1e-9;

std::string fmt_exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void TabularMdp::validate() const {
  if (n_states < 1) throw std::invalid_argument("mdp: n_states must be >= 1");
  if (n_actions < 1) throw std::invalid_argument("mdp: n_actions must be >= 1");
  if (horizon < 0) throw std::invalid_argument("mdp: horizon must be >= 0");
  if (reward.size() != static_cast<size_t>(n_states) * n_actions) {
    throw std::invalid_argument("mdp: reward table has wrong shape");
  }
  if (transition.size() !=
      static_cast<size_t>(n_states) * n_actions * n_states) {
    throw std::invalid_argument("mdp: transition table has wrong shape");
  }
  if (init_dist.size() != static_cast<size_t>(n_states)) {
    throw std::invalid_argument("mdp: init_dist has wrong shape");
  }
  for (int s = 0; s < n_states; ++s) {
    for (int a = 0; a < n_actions; ++a) {
      double sum = 0.0;
      for (int s2 = 0; s2 < n_states; ++s2) {
        double pv = p(s, a, s2);
        if (pv < 0.0) {
          throw std::invalid_argument("mdp: negative probability in row (s=" +
                                      std::to_string(s) +
                                      ",a=" + std::to_string(a) + ")");
        }
        sum += pv;
      }
      if (std::abs(sum - 1.0) > kRowSumTol) {
        throw std::invalid_argument(
            "mdp: transition row (s=" + std::to_string(s) +
            ",a=" + std::to_string(a) + ") sums to " + std::to_string(sum));
      }
    }
  }
  double mass = 0.0;
  for (int s = 0; s < n_states; ++s) {
    if (init_dist[s] < 0.0) {
      throw std::invalid_argument("mdp: negative init_dist at s=" +
                                  std::to_string(s));
    }
    mass += init_dist[s];
  }
  if (std::abs(mass - 1.0) > kRowSumTol) {
    throw std::invalid_argument("mdp: init_dist sums to " +
                                std::to_string(mass));
  }
}

Solution value_iteration(const TabularMdp& mdp) {
  const int S = mdp.n_states, A = mdp.n_actions, T = mdp.horizon;
  Solution sol;
  sol.tables.n_states = S;
  sol.tables.n_actions = A;
  sol.tables.horizon = T;
  sol.tables.v.assign(T + 1, std::vector<double>(S, 0.0));
  sol.tables.q.assign(T + 1, std::vector<double>(S * A, 0.0));
  sol.policy.staged.assign(T + 1, std::vector<std::vector<int>>(S));

  for (int t = T; t >= 0; --t) {
    for (int s = 0; s < S; ++s) {
      double vmax = -1e300;
      for (int a = 0; a < A; ++a) {
        double q = mdp.r(s, a);
        if (t < T) {
          const double* row = &mdp.transition[(s * A + a) * S];
          const std::vector<double>& vn = sol.tables.v[t + 1];
          for (int s2 = 0; s2 < S; ++s2) q += row[s2] * vn[s2];
        }
        sol.tables.q[t][s * A + a] = q;
        vmax = std::max(vmax, q);
      }
      sol.tables.v[t][s] = vmax;
      std::vector<int>& set = sol.policy.staged[t][s];
      for (int a = 0; a < A; ++a) {
        if (sol.tables.q[t][s * A + a] == vmax) set.push_back(a);
      }
    }
  }
  sol.policy.action_sets = sol.policy.staged[0];
  return sol;
}

double start_value(const ValueTables& tables, const TabularMdp& mdp) {
  double v = 0.0;
  for (int s = 0; s < mdp.n_states; ++s) {
    v += mdp.init_dist[s] * tables.v[0][s];
  }
  return v;
}

int sample_categorical(const double* w, int n, Rng& rng) {
  double u = rng.uniform();
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    acc += w[i];
    if (u < acc) return i;
  }
  // Guard against accumulated rounding: return the last positive entry.
  for (int i = n - 1; i >= 0; --i) {
    if (w[i] > 0.0) return i;
  }
  return n - 1;
}

EvalResult evaluate_policy(const TabularMdp& mdp, const ActionSampler& policy,
                           int n_episodes, Rng& rng) {
  if (n_episodes < 1) {
    throw std::invalid_argument("evaluate_policy: n_episodes must be >= 1");
  }
  EvalResult res;
  res.returns.reserve(n_episodes);
  for (int e = 0; e < n_episodes; ++e) {
    int s = sample_categorical(mdp.init_dist.data(), mdp.n_states, rng);
    double ret = 0.0;
    for (int t = 0; t <= mdp.horizon; ++t) {
      int a = policy(t, s, rng);
      ret += mdp.r(s, a);
      if (t < mdp.horizon) {
        const double* row =
            &mdp.transition[(s * mdp.n_actions + a) * mdp.n_states];
        s = sample_categorical(row, mdp.n_states, rng);
      }
    }
    res.returns.push_back(ret);
    res.mean += ret;
  }
  res.mean /= n_episodes;
  return res;
}

EvalResult evaluate_policy(const TabularMdp& mdp, const TabularPolicy& policy,
                           int n_episodes, Rng& rng) {
  ActionSampler sampler = [&policy](int t, int s, Rng&) {
    return policy.action(t, s);
  };
  return evaluate_policy(mdp, sampler, n_episodes, rng);
}

double exact_policy_value(const TabularMdp& mdp,
                          const ActionDistribution& policy) {
  const int S = mdp.n_states, A = mdp.n_actions, T = mdp.horizon;
  std::vector<double> next(S, 0.0), cur(S, 0.0);
  for (int t = T; t >= 0; --t) {
    for (int s = 0; s < S; ++s) {
      std::vector<double> pi = policy(t, s);
      if (pi.size() != static_cast<size_t>(A)) {
        throw std::invalid_argument(
            "exact_policy_value: policy distribution has wrong arity");
      }
      double v = 0.0;
      for (int a = 0; a < A; ++a) {
        if (pi[a] == 0.0) continue;
        double q = mdp.r(s, a);
        if (t < T) {
          const double* row = &mdp.transition[(s * A + a) * S];
          for (int s2 = 0; s2 < S; ++s2) q += row[s2] * next[s2];
        }
        v += pi[a] * q;
      }
      cur[s] = v;
    }
    next = cur;
  }
  double out = 0.0;
  for (int s = 0; s < S; ++s) out += mdp.init_dist[s] * next[s];
  return out;
}

double exact_policy_value(const TabularMdp& mdp, const TabularPolicy& policy) {
  ActionDistribution dist = [&policy, &mdp](int t, int s) {
    std::vector<double> pi(mdp.n_actions, 0.0);
    pi[policy.action(t, s)] = 1.0;
    return pi;
  };
  return exact_policy_value(mdp, dist);
}

namespace {

void enumerate_walk(const TabularMdp& m, int t, const std::vector<double>& dist,
                    double acc, std::vector<int>& seq, EnumeratedReturns& out) {
  if (t > m.horizon) {
    out.by_sequence.emplace(seq, acc);
    out.best = std::max(out.best, acc);
    return;
  }
  for (int a = 0; a < m.n_actions; ++a) {
    double step = 0.0;
    std::vector<double> next(m.n_states, 0.0);
    for (int s = 0; s < m.n_states; ++s) {
      double mass = dist[s];
      if (mass == 0.0) continue;
      step += mass * m.r(s, a);
      const double* row = &m.transition[(s * m.n_actions + a) * m.n_states];
      for (int s2 = 0; s2 < m.n_states; ++s2) next[s2] += mass * row[s2];
    }
    seq.push_back(a);
    enumerate_walk(m, t + 1, next, acc + step, seq, out);
    seq.pop_back();
  }
}

}  // namespace

EnumeratedReturns enumerate_returns(const TabularMdp& mdp,
                                    std::uint64_t max_sequences) {
  double count = std::pow(static_cast<double>(mdp.n_actions),
                          static_cast<double>(mdp.horizon + 1));
  if (!(count <= static_cast<double>(max_sequences))) {
    throw std::invalid_argument(
        "enumerate_returns: " + std::to_string(mdp.n_actions) + "^" +
        std::to_string(mdp.horizon + 1) + " sequences exceeds the cap of " +
        std::to_string(max_sequences));
  }
  EnumeratedReturns out;
  out.best = -1e300;
  std::vector<int> seq;
  enumerate_walk(mdp, 0, mdp.init_dist, 0.0, seq, out);
  return out;
}

void write_mdp(const TabularMdp& mdp, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("write_mdp: cannot open " + path);
  f << "mdp-format 1\n";
  f << "n_states " << mdp.n_states << "\n";
  f << "n_actions " << mdp.n_actions << "\n";
  f << "horizon " << mdp.horizon << "\n";
  f << "reward\n";
  for (int s = 0; s < mdp.n_states; ++s) {
    for (int a = 0; a < mdp.n_actions; ++a) {
      f << (a ? " " : "") << fmt_exact(mdp.r(s, a));
    }
    f << "\n";
  }
  f << "transition\n";
  for (int s = 0; s < mdp.n_states; ++s) {
    for (int a = 0; a < mdp.n_actions; ++a) {
      for (int s2 = 0; s2 < mdp.n_states; ++s2) {
        f << (s2 ? " " : "") << fmt_exact(mdp.p(s, a, s2));
      }
      f << "\n";
    }
  }
  f << "init_dist\n";
  for (int s = 0; s < mdp.n_states; ++s) {
    f << (s ? " " : "") << fmt_exact(mdp.init_dist[s]);
  }
  f << "\n";
  if (!f) throw std::runtime_error("write_mdp: write failed for " + path);
}

namespace {

std::string next_token(std::istream& in, const char* what) {
  std::string tok;
  if (!(in >> tok)) {
    throw std::invalid_argument(std::string("read_mdp: missing ") + what);
  }
  return tok;
}

int parse_int(std::istream& in, const char* what) {
  std::string tok = next_token(in, what);
  try {
    size_t pos = 0;
    int v = std::stoi(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument(std::string("read_mdp: bad integer for ") +
                                what + ": '" + tok + "'");
  }
}

double parse_double(std::istream& in, const char* what) {
  std::string tok = next_token(in, what);
  try {
    size_t pos = 0;
    double v = std::stod(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument(std::string("read_mdp: bad number for ") +
                                what + ": '" + tok + "'");
  }
}

void expect_keyword(std::istream& in, const std::string& kw) {
  std::string tok = next_token(in, kw.c_str());
  if (tok != kw) {
    throw std::invalid_argument("read_mdp: expected '" + kw + "', found '" +
                                tok + "'");
  }
}

}  // namespace

TabularMdp read_mdp(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("read_mdp: cannot open " + path);
  expect_keyword(f, "mdp-format");
  int version = parse_int(f, "format version");
  if (version != 1) {
    throw std::invalid_argument("read_mdp: unsupported format version " +
                                std::to_string(version));
  }
  TabularMdp m;
  expect_keyword(f, "n_states");
  m.n_states = parse_int(f, "n_states");
  expect_keyword(f, "n_actions");
  m.n_actions = parse_int(f, "n_actions");
  expect_keyword(f, "horizon");
  m.horizon = parse_int(f, "horizon");
  if (m.n_states < 1 || m.n_actions < 1 || m.horizon < 0) {
    throw std::invalid_argument("read_mdp: invalid dimensions");
  }
  m.reward.assign(static_cast<size_t>(m.n_states) * m.n_actions, 0.0);
  m.transition.assign(
      static_cast<size_t>(m.n_states) * m.n_actions * m.n_states, 0.0);
  m.init_dist.assign(m.n_states, 0.0);
  expect_keyword(f, "reward");
  for (double& v : m.reward) v = parse_double(f, "reward entry");
  expect_keyword(f, "transition");
  for (double& v : m.transition) v = parse_double(f, "transition entry");
  expect_keyword(f, "init_dist");
  for (double& v : m.init_dist) v = parse_double(f, "init_dist entry");
  m.validate();
  return m;
}

TabularMdp random_mdp(Rng& rng, int max_states, int max_actions,
                      int max_horizon, bool deterministic) {
  TabularMdp m;
  m.n_states = 2 + rng.uniform_int(std::max(1, max_states - 1));
  m.n_actions = 2 + rng.uniform_int(std::max(1, max_actions - 1));
  m.horizon = 1 + rng.uniform_int(std::max(1, max_horizon));
  const int S = m.n_states, A = m.n_actions;
  m.reward.resize(static_cast<size_t>(S) * A);
  for (double& v : m.reward) v = rng.uniform();
  m.transition.assign(static_cast<size_t>(S) * A * S, 0.0);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      if (deterministic) {
        m.set_p(s, a, rng.uniform_int(S), 1.0);
      } else {
        double sum = 0.0;
        std::vector<double> row(S);
        for (int s2 = 0; s2 < S; ++s2) {
          row[s2] = 0.05 + rng.uniform();
          sum += row[s2];
        }
        for (int s2 = 0; s2 < S; ++s2) m.set_p(s, a, s2, row[s2] / sum);
      }
    }
  }
  if (deterministic) {
    m.init_dist.assign(S, 0.0);
    m.init_dist[rng.uniform_int(S)] = 1.0;
  } else {
    m.init_dist.resize(S);
    double sum = 0.0;
    for (double& v : m.init_dist) {
      v = 0.05 + rng.uniform();
      sum += v;
    }
    for (double& v : m.init_dist) v /= sum;
  }
  return m;
}

}  // namespace rlbd
