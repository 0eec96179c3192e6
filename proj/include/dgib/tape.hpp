#pragma once

#include <Eigen/Core>
#include <functional>
#include <vector>

#include "dgib/motifs.hpp"
#include "dgib/types.hpp"

namespace dgib {

class Tape;

// Handle to a tape node. Values are Eigen matrices; scalars are 1x1.
struct Var {
  Tape* tape = nullptr;
  int id = -1;
  const Mat& value() const;
  const Mat& grad() const;
  bool valid() const { return tape != nullptr && id >= 0; }
};

// Reverse-mode tape over dense matrices. Nodes only reference earlier nodes,
// so running the stored closures in reverse creation order is a valid
// topological sweep.
class Tape {
 public:
  Var leaf(Mat v);

  void backward(Var loss);  // loss must be 1x1

  const Mat& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  const Mat& grad(int id) const;

  int make_node(Mat value, std::function<void(Tape&)> back);
  void set_back(int id, std::function<void(Tape&)> back);
  Mat& grad_ref(int id);           // allocates zeros on first touch
  bool grad_alive(int id) const;   // true once downstream wrote something

 private:
  struct Node {
    Mat value;
    Mat grad;
    std::function<void(Tape&)> back;
  };
  std::vector<Node> nodes_;
  Mat empty_;
};

// --- primitive ops -------------------------------------------------------
Var matmul(Var a, Var b);
Var transpose(Var a);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var add_rowvec(Var a, Var b);       // a: n x d, b: 1 x d broadcast over rows
Var cmul(Var a, Var b);             // Hadamard
Var scale(Var a, double c);
Var add_scalar(Var a, double c);
Var scalar_mul(Var s, Var a);       // s: 1x1 broadcast
Var cmul_const(Var a, const Mat& c);
Var vtanh(Var a);
Var vsigmoid(Var a);
Var vsoftplus(Var a);
Var vexp(Var a);
Var vlog(Var a);
Var vsqrt(Var a);
Var vsquare(Var a);
Var sum(Var a);                     // -> 1x1
Var row_sum(Var a);                 // n x d -> n x 1
Var mean_rows(Var a);               // n x d -> 1 x d
Var hcat(const std::vector<Var>& xs);
Var vcat(const std::vector<Var>& xs);
Var cols(Var a, int begin, int count);
Var gather_rows(Var a, std::vector<int> rows);

// --- composite / special ops --------------------------------------------
// det(U U^T) for U (K x d). Polynomial in U: differentiable everywhere,
// gradient 2 * adj(U U^T) * U.
Var gram_det(Var u);

// Numerically stable binary cross-entropy of a 1x1 logit against y in {0,1}.
Var binary_ce_logit(Var logit, double label);

// Concrete (binary Gumbel) relaxation, elementwise on an m x 1 column:
//   a = sigmoid((logit(clamp(b)) + logit(eps)) / tau)
// b is clamped to [1e-6, 1 - 1e-6] before the logit.
Var concrete_relax(Var b, const Eigen::ArrayXd& eps, double tau);

// y[s] = max over segment s of x (x: m x 1). Gradient flows to the argmax.
Var segment_max(Var x, const std::vector<std::vector<int>>& segments);

// Gate-weighted motif-based adjacency as a tape op: arc_gates is p x 1,
// output is n x n. Matches weighted_motif_adjacency on values. The caller
// must keep `instances` alive until backward() has run.
Var weighted_motif_matrix(Var arc_gates, const InstanceSet& instances, int n);

// Symmetric gated adjacency: out(i,j) = out(j,i) += gate of arc (i,j). The
// plain-adjacency channel used when motifs are disabled.
Var scatter_arc_matrix(Var arc_gates, const std::vector<std::pair<int, int>>& arcs, int n);

// 0.5 * (sum(sigma) + sum(mu^2) - d - sum(log sigma)); mu, sigma are 1 x d.
Var gaussian_kl_node(Var mu, Var sigma);

// Adjugate via cofactors; exact for the small K x K Gram matrices used here.
Mat matrix_adjugate(const Mat& a);

}  // namespace dgib
