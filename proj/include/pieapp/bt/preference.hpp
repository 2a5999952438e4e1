#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace pieapp::bt {

// Probability that the item scored s_a is preferred over the item scored
// s_b under the Bradley-Terry model with negated exponent:
// p = 1 / (1 + e^(s_a - s_b)). Lower score = closer to the reference.
double bt_probability(double s_a, double s_b);

struct PreferenceLabel {
  double p = 0.0;
  int n_responses = 0;
};

// Sample mean of 0/1 votes.
PreferenceLabel estimate_preference(const std::vector<int>& votes);

// P(|p_hat - p| <= eta) at worst-case p = 1/2 under the normal
// approximation: 2*Phi(eta*sqrt(4n)) - 1.
double normal_coverage(int n, double eta);

// Exact binomial counterpart, sum of the binomial mass with |k/n - p| <= eta.
double exact_binomial_coverage(int n, double p, double eta);

// Smallest n with normal_coverage(n, eta) >= p_target. Reproduces the
// (eta=0.15, P=0.94) -> 40 and (eta=0.11, P=0.972) -> 100 operating points.
int min_responses(double eta, double p_target);

// c[i][j] = number of responses preferring item i over item j.
class CountMatrix {
 public:
  CountMatrix() = default;
  explicit CountMatrix(std::size_t n_items,
                       std::vector<std::string> items = {});

  std::size_t n_items() const { return n_; }
  std::int64_t at(std::size_t i, std::size_t j) const {
    return counts_[i * n_ + j];
  }
  void add(std::size_t i, std::size_t j, std::int64_t wins);
  std::int64_t pair_total(std::size_t i, std::size_t j) const {
    return at(i, j) + at(j, i);
  }
  bool queried(std::size_t i, std::size_t j) const {
    return pair_total(i, j) > 0;
  }

  const std::vector<std::string>& items() const { return items_; }

  // True when every item is reachable from item 0 through queried pairs.
  bool connected() const;

  // CSV with a one-line JSON header naming the items.
  void save_csv(std::ostream& os) const;
  static CountMatrix load_csv(std::istream& is);

 private:
  std::size_t n_ = 0;
  std::vector<std::int64_t> counts_;
  std::vector<std::string> items_;
};

struct MleResult {
  std::vector<double> scores;  // mean-zero gauge
  bool converged = false;
  int iterations = 0;
  double grad_norm = 0.0;  // final infinity norm of the projected gradient
};

// Maximum-likelihood scores from a count matrix:
//   maximize sum_ij c_ij * log sigmoid(s_j - s_i) - ridge * ||s||^2
// ("i preferred over j" is more likely when s_i < s_j). Solved by gradient
// ascent with backtracking line search inside the mean-zero gauge; the
// projected gradient's infinity norm is the convergence measure.
// Throws if the comparison graph is disconnected. Non-convergence within
// max_iters is reported through the result, not thrown.
MleResult mle_scores(const CountMatrix& c, double ridge = 1e-3,
                     int max_iters = 10000, double tol = 1e-8);

struct FilledProbabilities {
  std::size_t n_items = 0;
  std::vector<double> p;          // n x n, row-major; p[i*n+j] = P(i over j)
  std::vector<std::uint8_t> measured;  // 1 where the pair was queried
  MleResult mle;

  double at(std::size_t i, std::size_t j) const { return p[i * n_items + j]; }
  bool is_measured(std::size_t i, std::size_t j) const {
    return measured[i * n_items + j] != 0;
  }
};

// Runs mle_scores and evaluates the BT model on every pair, keeping the
// measured/estimated distinction per pair.
FilledProbabilities fill_missing_probabilities(const CountMatrix& c,
                                               double ridge = 1e-3,
                                               int max_iters = 10000,
                                               double tol = 1e-8);

struct BtFitBin {
  double lo = 0.0, hi = 0.0;
  std::size_t count = 0;
  double p25 = 0.0, p75 = 0.0;
};

struct BtFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::vector<BtFitBin> bins;  // 0.1-wide bins over the ground-truth axis
};

// Least-squares line est = slope * gt + intercept, plus the 25th/75th
// percentiles of the estimates within each 0.1-wide ground-truth bin.
BtFit validate_bt_fit(const std::vector<double>& gt,
                      const std::vector<double>& est);

}  // namespace pieapp::bt
