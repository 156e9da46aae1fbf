#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace mflab {

// Weighted point cloud on R^k: one atom per row of `points`.
struct DiscreteMeasure {
  Eigen::MatrixXd points;
  Eigen::VectorXd weights;

  int size() const { return static_cast<int>(points.rows()); }
  int dim() const { return static_cast<int>(points.cols()); }

  static DiscreteMeasure uniform(Eigen::MatrixXd pts);
  static DiscreteMeasure dirac(const Eigen::VectorXd& point);
  // Throws std::invalid_argument on NaN/Inf, negative weights or a total mass off 1 by more than tol.
  void validate(double tol = 1e-12) const;
  bool has_equal_weights() const;
};

struct PlanEntry {
  int source;
  int target;
  double mass;
};

struct TransportPlan {
  std::vector<PlanEntry> entries;
  double cost_value = 0.0;  // sum of mass * |x - y|^p
  double p = 2.0;

  // Largest absolute deviation of row/column sums from the prescribed weights.
  double marginal_violation(const DiscreteMeasure& mu, const DiscreteMeasure& nu) const;
};

namespace transport {

// Maximum support size handled by the exact solvers.
inline constexpr int kMaxSupport = 2048;

// |x - y|^p with the Euclidean norm on R^k.
double ground_cost(const double* x, const double* y, int k, double p);
Eigen::MatrixXd cost_matrix(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p);

struct ExactResult {
  double dist = 0.0;   // (optimal cost)^(1/p)
  TransportPlan plan;
  Eigen::VectorXd a;   // dual potential on the support of mu
  Eigen::VectorXd b;   // dual potential on the support of nu
};

ExactResult wasserstein_exact(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p);

struct SinkhornResult {
  double dist_reg = 0.0;  // (cost of the rounded plan)^(1/p)
  TransportPlan plan;     // feasible after rounding
  bool converged = false;
  int iterations = 0;
  double marginal_gap = 0.0;  // L1 marginal violation before rounding
};

SinkhornResult wasserstein_sinkhorn(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p, double reg,
                                    int max_iter, double tol);

// Primal cost of `plan` minus the dual value of (a, b). Throws if a(x)+b(y) > |x-y|^p anywhere.
double kantorovich_gap(const DiscreteMeasure& mu, const DiscreteMeasure& nu, double p, const TransportPlan& plan,
                       const Eigen::VectorXd& a, const Eigen::VectorXd& b);

struct SubsampleEstimate {
  double mean = 0.0;       // mean of the distance over repeats
  double std_err = 0.0;
  double mean_pow = 0.0;   // mean of distance^p over repeats
  double std_err_pow = 0.0;
  int repeats = 0;
};

SubsampleEstimate subsample_distance(const DiscreteMeasure& A, const DiscreteMeasure& B, double p, int m, int repeats,
                                     std::uint64_t seed);

// Square assignment (Hungarian, shortest augmenting paths). Ties go to the lowest column index.
struct Assignment {
  std::vector<int> row_to_col;
  Eigen::VectorXd u;  // row potentials
  Eigen::VectorXd v;  // column potentials, u_i + v_j <= c_ij
};
Assignment solve_assignment(const Eigen::MatrixXd& cost);

// Min-cost transportation problem by the primal network simplex method.
struct NetworkSimplexResult {
  Eigen::MatrixXd flow;  // dense m x n flow matrix
  Eigen::VectorXd a;
  Eigen::VectorXd b;
  double cost = 0.0;
};
NetworkSimplexResult solve_transport_lp(const Eigen::MatrixXd& cost, const Eigen::VectorXd& supply,
                                        const Eigen::VectorXd& demand);

// CSV: "weight,c0,c1,..." one atom per line, with a header row.
void write_measure_csv(const std::string& path, const DiscreteMeasure& mu,
                       const std::vector<std::string>& coordinate_names = {});
DiscreteMeasure read_measure_csv(const std::string& path);
// CSV: "source,target,mass".
void write_plan_csv(const std::string& path, const TransportPlan& plan);

}  // namespace transport
}  // namespace mflab
