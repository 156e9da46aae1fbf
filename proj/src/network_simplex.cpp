// Primal network simplex for the uncapacitated transportation problem.
// The spanning tree is stored with parent/pred/thread lists in the style of
// LEMON's implementation; an artificial root joins every node so that the
// starting basis is feasible.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "mflab/transport.hpp"

namespace mflab::transport {

namespace {

enum : int { kStateUpper = -1, kStateTree = 0, kStateLower = 1 };
enum : int { kDirUp = 1, kDirDown = -1 };

class NetworkSimplex {
 public:
  NetworkSimplex(const Eigen::MatrixXd& cost, const Eigen::VectorXd& supply, const Eigen::VectorXd& demand)
      : m_(static_cast<int>(cost.rows())), n_(static_cast<int>(cost.cols())) {
    node_num_ = m_ + n_;
    arc_num_ = m_ * n_;
    const int all_nodes = node_num_ + 1;
    const int all_arcs = arc_num_ + node_num_;
    root_ = node_num_;
    source_.resize(all_arcs);
    target_.resize(all_arcs);
    cost_.resize(all_arcs);
    flow_.assign(all_arcs, 0.0);
    state_.resize(all_arcs);
    supply_.resize(all_nodes);
    pi_.resize(all_nodes);
    parent_.resize(all_nodes);
    pred_.resize(all_nodes);
    thread_.resize(all_nodes);
    rev_thread_.resize(all_nodes);
    succ_num_.resize(all_nodes);
    last_succ_.resize(all_nodes);
    pred_dir_.resize(all_nodes);

    double max_cost = 0.0;
    for (int i = 0; i < m_; ++i) {
      for (int j = 0; j < n_; ++j) {
        const int e = i * n_ + j;
        source_[e] = i;
        target_[e] = m_ + j;
        cost_[e] = cost(i, j);
        state_[e] = kStateLower;
        max_cost = std::max(max_cost, std::abs(cost(i, j)));
      }
    }
    double sum = 0.0;
    for (int i = 0; i < m_; ++i) sum += (supply_[i] = supply(i));
    for (int j = 0; j < n_; ++j) sum += (supply_[m_ + j] = -demand(j));
    supply_[root_] = -sum;
    eps_ = 1e-13 * std::max(1.0, max_cost);
    art_cost_ = (max_cost + 1.0) * static_cast<double>(node_num_);

    for (int u = 0, e = arc_num_; u != node_num_; ++u, ++e) {
      parent_[u] = root_;
      pred_[u] = e;
      thread_[u] = u + 1;
      rev_thread_[u + 1] = u;
      succ_num_[u] = 1;
      last_succ_[u] = u;
      state_[e] = kStateTree;
      if (supply_[u] >= 0) {
        pred_dir_[u] = kDirUp;
        pi_[u] = 0;
        source_[e] = u;
        target_[e] = root_;
        flow_[e] = supply_[u];
        cost_[e] = 0;
      } else {
        pred_dir_[u] = kDirDown;
        pi_[u] = art_cost_;
        source_[e] = root_;
        target_[e] = u;
        flow_[e] = -supply_[u];
        cost_[e] = art_cost_;
      }
    }
    parent_[root_] = -1;
    pred_[root_] = -1;
    thread_[root_] = 0;
    rev_thread_[0] = root_;
    succ_num_[root_] = node_num_ + 1;
    last_succ_[root_] = root_ - 1;
    pi_[root_] = 0;

    block_size_ = std::max(10, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(arc_num_)))));
  }

  void run() {
    while (find_entering_arc()) {
      find_join_node();
      find_leaving_arc();
      change_flow();
      update_tree_structure();
      update_potential();
    }
  }

  NetworkSimplexResult result() const {
    NetworkSimplexResult r;
    r.flow = Eigen::MatrixXd::Zero(m_, n_);
    r.a.resize(m_);
    r.b.resize(n_);
    double cost = 0.0;
    for (int i = 0; i < m_; ++i) {
      for (int j = 0; j < n_; ++j) {
        const double f = flow_[i * n_ + j];
        if (f > 0) {
          r.flow(i, j) = f;
          cost += f * cost_[i * n_ + j];
        }
      }
    }
    // Reduced costs c + pi[s] - pi[t] >= 0, so a = -pi on sources and b = pi on sinks.
    for (int i = 0; i < m_; ++i) r.a(i) = -pi_[i];
    for (int j = 0; j < n_; ++j) r.b(j) = pi_[m_ + j];
    r.cost = cost;
    return r;
  }

  double artificial_flow() const {
    double s = 0.0;
    for (int e = arc_num_; e < arc_num_ + node_num_; ++e) s += std::abs(flow_[e]);
    return s;
  }

 private:
  bool find_entering_arc() {
    double min = -eps_;
    int cnt = block_size_;
    int e;
    bool found = false;
    for (e = next_arc_; e != arc_num_; ++e) {
      const double c = state_[e] * (cost_[e] + pi_[source_[e]] - pi_[target_[e]]);
      if (c < min) {
        min = c;
        in_arc_ = e;
        found = true;
      }
      if (--cnt == 0) {
        if (found) goto search_end;
        cnt = block_size_;
      }
    }
    for (e = 0; e != next_arc_; ++e) {
      const double c = state_[e] * (cost_[e] + pi_[source_[e]] - pi_[target_[e]]);
      if (c < min) {
        min = c;
        in_arc_ = e;
        found = true;
      }
      if (--cnt == 0) {
        if (found) goto search_end;
        cnt = block_size_;
      }
    }
    if (!found) return false;
  search_end:
    next_arc_ = e;
    return true;
  }

  void find_join_node() {
    int u = source_[in_arc_], v = target_[in_arc_];
    while (u != v) {
      if (succ_num_[u] < succ_num_[v]) {
        u = parent_[u];
      } else {
        v = parent_[v];
      }
    }
    join_ = u;
  }

  void find_leaving_arc() {
    int first, second;
    if (state_[in_arc_] == kStateLower) {
      first = source_[in_arc_];
      second = target_[in_arc_];
    } else {
      first = target_[in_arc_];
      second = source_[in_arc_];
    }
    const double inf = std::numeric_limits<double>::infinity();
    delta_ = inf;
    int result = 0;
    for (int u = first; u != join_; u = parent_[u]) {
      const int e = pred_[u];
      const double d = pred_dir_[u] == kDirDown ? inf : flow_[e];
      if (d < delta_) {
        delta_ = d;
        u_out_ = u;
        result = 1;
      }
    }
    for (int u = second; u != join_; u = parent_[u]) {
      const int e = pred_[u];
      const double d = pred_dir_[u] == kDirUp ? inf : flow_[e];
      if (d <= delta_) {
        delta_ = d;
        u_out_ = u;
        result = 2;
      }
    }
    if (result == 0) throw std::runtime_error("network simplex: unbounded cycle");
    if (result == 1) {
      u_in_ = first;
      v_in_ = second;
    } else {
      u_in_ = second;
      v_in_ = first;
    }
  }

  void change_flow() {
    if (delta_ > 0) {
      const double val = state_[in_arc_] * delta_;
      flow_[in_arc_] += val;
      for (int u = source_[in_arc_]; u != join_; u = parent_[u]) flow_[pred_[u]] -= pred_dir_[u] * val;
      for (int u = target_[in_arc_]; u != join_; u = parent_[u]) flow_[pred_[u]] += pred_dir_[u] * val;
    }
    state_[in_arc_] = kStateTree;
    const int out = pred_[u_out_];
    flow_[out] = 0.0;  // the blocking arc leaves the basis at its lower bound
    state_[out] = kStateLower;
  }

  void update_tree_structure() {
    const int old_rev_thread = rev_thread_[u_out_];
    const int old_succ_num = succ_num_[u_out_];
    const int old_last_succ = last_succ_[u_out_];
    v_out_ = parent_[u_out_];

    if (u_in_ == u_out_) {
      parent_[u_in_] = v_in_;
      pred_[u_in_] = in_arc_;
      pred_dir_[u_in_] = u_in_ == source_[in_arc_] ? kDirUp : kDirDown;
      if (thread_[v_in_] != u_out_) {
        int after = thread_[old_last_succ];
        thread_[old_rev_thread] = after;
        rev_thread_[after] = old_rev_thread;
        after = thread_[v_in_];
        thread_[v_in_] = u_out_;
        rev_thread_[u_out_] = v_in_;
        thread_[old_last_succ] = after;
        rev_thread_[after] = old_last_succ;
      }
    } else {
      const int thread_continue = old_rev_thread == v_in_ ? thread_[old_last_succ] : thread_[v_in_];
      int stem = u_in_;
      int par_stem = v_in_;
      int last = last_succ_[u_in_];
      int after = thread_[last];
      thread_[v_in_] = u_in_;
      dirty_revs_.clear();
      dirty_revs_.push_back(v_in_);
      while (stem != u_out_) {
        const int next_stem = parent_[stem];
        thread_[last] = next_stem;
        dirty_revs_.push_back(last);
        const int before = rev_thread_[stem];
        thread_[before] = after;
        rev_thread_[after] = before;
        parent_[stem] = par_stem;
        par_stem = stem;
        stem = next_stem;
        last = last_succ_[stem] == last_succ_[par_stem] ? rev_thread_[par_stem] : last_succ_[stem];
        after = thread_[last];
      }
      parent_[u_out_] = par_stem;
      thread_[last] = thread_continue;
      rev_thread_[thread_continue] = last;
      last_succ_[u_out_] = last;
      if (old_rev_thread != v_in_) {
        thread_[old_rev_thread] = after;
        rev_thread_[after] = old_rev_thread;
      }
      for (int u : dirty_revs_) rev_thread_[thread_[u]] = u;

      int tmp_sc = 0;
      const int tmp_ls = last_succ_[u_out_];
      for (int u = u_out_, p = parent_[u]; u != u_in_; u = p, p = parent_[u]) {
        pred_[u] = pred_[p];
        pred_dir_[u] = -pred_dir_[p];
        tmp_sc += succ_num_[u] - succ_num_[p];
        succ_num_[u] = tmp_sc;
        last_succ_[p] = tmp_ls;
      }
      pred_[u_in_] = in_arc_;
      pred_dir_[u_in_] = u_in_ == source_[in_arc_] ? kDirUp : kDirDown;
      succ_num_[u_in_] = old_succ_num;
    }

    const int up_limit_out = last_succ_[join_] == v_in_ ? join_ : -1;
    const int last_succ_out = last_succ_[u_out_];
    for (int u = v_in_; u != -1 && last_succ_[u] == v_in_; u = parent_[u]) last_succ_[u] = last_succ_out;

    if (join_ != old_rev_thread && v_in_ != old_rev_thread) {
      for (int u = v_out_; u != up_limit_out && last_succ_[u] == old_last_succ; u = parent_[u])
        last_succ_[u] = old_rev_thread;
    } else if (last_succ_out != old_last_succ) {
      for (int u = v_out_; u != up_limit_out && last_succ_[u] == old_last_succ; u = parent_[u])
        last_succ_[u] = last_succ_out;
    }

    for (int u = v_in_; u != join_; u = parent_[u]) succ_num_[u] += old_succ_num;
    for (int u = v_out_; u != join_; u = parent_[u]) succ_num_[u] -= old_succ_num;
  }

  void update_potential() {
    const double sigma = pi_[v_in_] - pi_[u_in_] - pred_dir_[u_in_] * cost_[in_arc_];
    const int end = thread_[last_succ_[u_in_]];
    for (int u = u_in_; u != end; u = thread_[u]) pi_[u] += sigma;
  }

  int m_, n_, node_num_, arc_num_, root_;
  std::vector<int> source_, target_, state_;
  std::vector<double> cost_, flow_, supply_, pi_;
  std::vector<int> parent_, pred_, thread_, rev_thread_, succ_num_, last_succ_, pred_dir_;
  std::vector<int> dirty_revs_;
  double eps_ = 0.0, art_cost_ = 0.0, delta_ = 0.0;
  int block_size_ = 10, next_arc_ = 0;
  int in_arc_ = 0, join_ = 0, u_in_ = 0, v_in_ = 0, u_out_ = 0, v_out_ = 0;
};

}  // namespace

NetworkSimplexResult solve_transport_lp(const Eigen::MatrixXd& cost, const Eigen::VectorXd& supply,
                                        const Eigen::VectorXd& demand) {
  if (cost.rows() != supply.size() || cost.cols() != demand.size())
    throw std::invalid_argument("solve_transport_lp: shape mismatch");
  if (cost.rows() == 0 || cost.cols() == 0) throw std::invalid_argument("solve_transport_lp: empty support");
  NetworkSimplex ns(cost, supply, demand);
  ns.run();
  if (ns.artificial_flow() > 1e-9) throw std::runtime_error("network simplex: infeasible transportation problem");
  return ns.result();
}

}  // namespace mflab::transport
