#include "pieapp/bt/preference.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "pieapp/numeric/scalar_math.hpp"

namespace pieapp::bt {

namespace {

[[noreturn]] void fail(const std::string& msg) {
  throw std::invalid_argument("bt-preference: " + msg);
}

double std_normal_cdf(double x) {
  return 0.5 * (1.0 + std::erf(x / std::sqrt(2.0)));
}

}  // namespace

double bt_probability(double s_a, double s_b) {
  return numeric::preference_sigmoid(s_a, s_b);
}

PreferenceLabel estimate_preference(const std::vector<int>& votes) {
  if (votes.empty()) fail("estimate_preference: empty vote list");
  long ones = 0;
  for (int v : votes) {
    if (v != 0 && v != 1) fail("estimate_preference: votes must be 0 or 1");
    ones += v;
  }
  PreferenceLabel label;
  label.n_responses = static_cast<int>(votes.size());
  label.p = static_cast<double>(ones) / static_cast<double>(votes.size());
  return label;
}

double normal_coverage(int n, double eta) {
  return 2.0 * std_normal_cdf(eta * std::sqrt(4.0 * n)) - 1.0;
}

double exact_binomial_coverage(int n, double p, double eta) {
  if (n <= 0) fail("exact_binomial_coverage: n must be positive");
  if (p < 0.0 || p > 1.0) fail("exact_binomial_coverage: p out of range");
  // log-space mass to stay stable for large n
  double total = 0.0;
  for (int k = 0; k <= n; ++k) {
    const double phat = static_cast<double>(k) / n;
    // tiny slack so k/n landing exactly on the eta boundary is not lost
    // to rounding (e.g. 26/40 - 0.5 evaluates just above 0.15)
    if (std::abs(phat - p) > eta + 1e-12) continue;
    double logpmf = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) -
                    std::lgamma(n - k + 1.0);
    if (k > 0) logpmf += k * std::log(p);
    if (k < n) logpmf += (n - k) * std::log1p(-p);
    total += std::exp(logpmf);
  }
  return std::min(total, 1.0);
}

int min_responses(double eta, double p_target) {
  if (!(eta > 0.0 && eta < 0.5)) fail("min_responses: eta must be in (0, 0.5)");
  if (!(p_target > 0.0 && p_target < 1.0)) {
    fail("min_responses: p_target must be in (0, 1)");
  }
  for (int n = 1; n <= 10'000'000; ++n) {
    if (normal_coverage(n, eta) >= p_target) return n;
  }
  fail("min_responses: no n below 1e7 reaches the target");
}

CountMatrix::CountMatrix(std::size_t n_items, std::vector<std::string> items)
    : n_(n_items), counts_(n_items * n_items, 0), items_(std::move(items)) {
  if (n_ == 0) fail("CountMatrix: need at least one item");
  if (items_.empty()) {
    items_.reserve(n_);
    for (std::size_t i = 0; i < n_; ++i) items_.push_back("item" + std::to_string(i));
  }
  if (items_.size() != n_) fail("CountMatrix: item name count mismatch");
}

void CountMatrix::add(std::size_t i, std::size_t j, std::int64_t wins) {
  if (i >= n_ || j >= n_) fail("CountMatrix: index out of range");
  if (i == j) fail("CountMatrix: diagonal must stay zero");
  if (wins < 0) fail("CountMatrix: negative count");
  counts_[i * n_ + j] += wins;
}

bool CountMatrix::connected() const {
  std::vector<char> seen(n_, 0);
  std::vector<std::size_t> stack{0};
  seen[0] = 1;
  std::size_t visited = 1;
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    for (std::size_t j = 0; j < n_; ++j) {
      if (!seen[j] && i != j && queried(i, j)) {
        seen[j] = 1;
        ++visited;
        stack.push_back(j);
      }
    }
  }
  return visited == n_;
}

void CountMatrix::save_csv(std::ostream& os) const {
  os << "# {\"items\":[";
  for (std::size_t i = 0; i < n_; ++i) {
    if (i) os << ",";
    os << '"' << items_[i] << '"';
  }
  os << "]}\n";
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = 0; j < n_; ++j) {
      if (j) os << ',';
      os << counts_[i * n_ + j];
    }
    os << '\n';
  }
}

CountMatrix CountMatrix::load_csv(std::istream& is) {
  std::string header;
  if (!std::getline(is, header) || header.rfind("# {", 0) != 0) {
    fail("CountMatrix: missing JSON header line");
  }
  // header: # {"items":["a","b",...]}
  std::vector<std::string> items;
  std::size_t pos = header.find('[');
  const std::size_t end = header.rfind(']');
  if (pos == std::string::npos || end == std::string::npos) {
    fail("CountMatrix: malformed header");
  }
  ++pos;
  while (pos < end) {
    const std::size_t q0 = header.find('"', pos);
    if (q0 == std::string::npos || q0 > end) break;
    const std::size_t q1 = header.find('"', q0 + 1);
    items.push_back(header.substr(q0 + 1, q1 - q0 - 1));
    pos = q1 + 1;
  }
  if (items.empty()) fail("CountMatrix: header names no items");

  CountMatrix c(items.size(), items);
  std::string line;
  std::size_t row = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (row >= c.n_) fail("CountMatrix: more rows than items");
    std::stringstream ss(line);
    std::string cell;
    std::size_t col = 0;
    while (std::getline(ss, cell, ',')) {
      if (col >= c.n_) fail("CountMatrix: more columns than items");
      const std::int64_t v = std::stoll(cell);
      if (v < 0) fail("CountMatrix: negative count");
      if (row == col && v != 0) fail("CountMatrix: nonzero diagonal");
      c.counts_[row * c.n_ + col] = v;
      ++col;
    }
    if (col != c.n_) fail("CountMatrix: short row");
    ++row;
  }
  if (row != c.n_) fail("CountMatrix: short matrix");
  return c;
}

namespace {

// Log-likelihood plus ridge, and its gradient, both in the full coordinates.
double objective(const CountMatrix& c, const std::vector<double>& s,
                 double ridge) {
  const std::size_t n = c.n_items();
  double obj = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const std::int64_t cnt = c.at(i, j);
      if (cnt == 0 || i == j) continue;
      // log sigmoid(s_j - s_i) = -softplus(s_i - s_j)
      obj -= static_cast<double>(cnt) * numeric::softplus(s[i] - s[j]);
    }
  }
  for (double v : s) obj -= ridge * v * v;
  return obj;
}

void gradient(const CountMatrix& c, const std::vector<double>& s, double ridge,
              std::vector<double>& g) {
  const std::size_t n = c.n_items();
  std::fill(g.begin(), g.end(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const std::int64_t cnt = c.at(i, j);
      if (cnt == 0 || i == j) continue;
      const double t = static_cast<double>(cnt) * numeric::logistic(s[i] - s[j]);
      g[i] -= t;
      g[j] += t;
    }
  }
  for (std::size_t k = 0; k < n; ++k) g[k] -= 2.0 * ridge * s[k];
}

void center(std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  for (double& x : v) x -= mean;
}

}  // namespace

MleResult mle_scores(const CountMatrix& c, double ridge, int max_iters,
                     double tol) {
  if (ridge < 0.0) fail("mle_scores: ridge must be non-negative");
  if (!c.connected()) {
    fail("mle_scores: comparison graph is disconnected");
  }
  const std::size_t n = c.n_items();
  MleResult res;
  res.scores.assign(n, 0.0);
  if (n == 1) {
    res.converged = true;
    return res;
  }

  std::vector<double> g(n), trial(n), prev_s, prev_g;
  double obj = objective(c, res.scores, ridge);
  // non-monotone (GLL) acceptance window; BB steps need the slack
  std::vector<double> recent{obj};
  constexpr std::size_t kWindow = 8;
  std::vector<double> best_scores = res.scores;
  double best_obj = obj;
  for (int iter = 0; iter < max_iters; ++iter) {
    gradient(c, res.scores, ridge, g);
    center(g);  // ascend in the mean-zero gauge
    double gnorm = 0.0, gsq = 0.0;
    for (double v : g) {
      gnorm = std::max(gnorm, std::abs(v));
      gsq += v * v;
    }
    res.iterations = iter;
    res.grad_norm = gnorm;
    if (gnorm <= tol) {
      res.converged = true;
      break;
    }

    // Barzilai-Borwein trial step; plain step doubling crawls along the
    // ridge-flat direction of degenerate count matrices.
    double step = 1.0;
    if (!prev_s.empty()) {
      double ss = 0.0, sy = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        const double ds = res.scores[k] - prev_s[k];
        const double dg = prev_g[k] - g[k];
        ss += ds * ds;
        sy += ds * dg;
      }
      if (sy > 0.0 && ss > 0.0) step = std::clamp(ss / sy, 1e-12, 1e8);
    }
    prev_s = res.scores;
    prev_g = g;

    const double ref = *std::min_element(recent.begin(), recent.end());
    bool accepted = false;
    for (int half = 0; half < 120; ++half) {
      for (std::size_t k = 0; k < n; ++k) {
        trial[k] = res.scores[k] + step * g[k];
      }
      const double cand = objective(c, trial, ridge);
      if (cand >= ref + 1e-4 * step * gsq) {
        res.scores = trial;
        obj = cand;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // line search exhausted: gradient is numerically flat
      res.converged = gnorm <= std::max(tol, 1e-6);
      break;
    }
    recent.push_back(obj);
    if (recent.size() > kWindow) recent.erase(recent.begin());
    if (obj > best_obj) {
      best_obj = obj;
      best_scores = res.scores;
    }
  }
  if (!res.converged && best_obj > objective(c, res.scores, ridge)) {
    res.scores = best_scores;
  }
  center(res.scores);
  return res;
}

FilledProbabilities fill_missing_probabilities(const CountMatrix& c,
                                               double ridge, int max_iters,
                                               double tol) {
  FilledProbabilities out;
  out.mle = mle_scores(c, ridge, max_iters, tol);
  const std::size_t n = c.n_items();
  out.n_items = n;
  out.p.assign(n * n, 0.5);
  out.measured.assign(n * n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      out.p[i * n + j] = bt_probability(out.mle.scores[i], out.mle.scores[j]);
      out.measured[i * n + j] = c.queried(i, j) ? 1 : 0;
    }
  }
  return out;
}

namespace {

double percentile(std::vector<double> v, double q) {
  // linear interpolation between order statistics (the common "type 7" rule)
  std::sort(v.begin(), v.end());
  if (v.size() == 1) return v[0];
  const double pos = q * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(lo);
  if (lo + 1 >= v.size()) return v.back();
  return v[lo] + frac * (v[lo + 1] - v[lo]);
}

}  // namespace

BtFit validate_bt_fit(const std::vector<double>& gt,
                      const std::vector<double>& est) {
  if (gt.size() != est.size()) fail("validate_bt_fit: length mismatch");
  if (gt.size() < 2) fail("validate_bt_fit: need at least two points");
  const double n = static_cast<double>(gt.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    sx += gt[i];
    sy += est[i];
    sxx += gt[i] * gt[i];
    sxy += gt[i] * est[i];
  }
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) fail("validate_bt_fit: ground truth has zero variance");
  BtFit fit;
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;

  for (int b = 0; b < 10; ++b) {
    const double lo = 0.1 * b;
    const double hi = 0.1 * (b + 1);
    std::vector<double> in_bin;
    for (std::size_t i = 0; i < gt.size(); ++i) {
      const bool last = (b == 9);
      if (gt[i] >= lo && (gt[i] < hi || (last && gt[i] <= hi))) {
        in_bin.push_back(est[i]);
      }
    }
    if (in_bin.empty()) continue;
    BtFitBin bin;
    bin.lo = lo;
    bin.hi = hi;
    bin.count = in_bin.size();
    bin.p25 = percentile(in_bin, 0.25);
    bin.p75 = percentile(in_bin, 0.75);
    fit.bins.push_back(bin);
  }
  return fit;
}

}  // namespace pieapp::bt
