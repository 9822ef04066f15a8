#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "qgraph/graph.hpp"

namespace qgraph {

using cplx = std::complex<double>;

// Standard (Kirchhoff) vertex scattering block: -1 + 2/d on the diagonal,
// 2/d elsewhere.
Eigen::MatrixXd vertex_block(int d);

// S_v in the bond basis. Row and column b refer to the half-edge of bond b at
// its origin vertex; S_v[b', b] = block(d)[slot(b'), slot(b)] when b and b'
// leave the same vertex, where slot is the position in BondBasis::outgoing.
// With this convention S_v is symmetric and block diagonal per vertex, and
// the bond order reproduces the 8x8 worked example exactly when edges are
// listed in that example's order.
Eigen::MatrixXd assemble_vertex_scattering(const MetricGraph& g);

// S_e(k)[reverse(b), b] = exp(i k l_b).
Eigen::MatrixXcd assemble_edge_scattering(const MetricGraph& g, cplx k);

// Evaluates D(k) = det(S_e(k) S_v - I) and related quantities for a concrete
// graph. Immutable; every call uses its own scratch.
class SecularEvaluator {
 public:
  explicit SecularEvaluator(MetricGraph g);

  const MetricGraph& graph() const { return graph_; }
  const BondBasis& basis() const { return basis_; }
  const Eigen::MatrixXd& vertex_scattering() const { return sv_; }
  int dimension() const { return basis_.size(); }
  double total_length() const { return total_length_; }
  double min_length() const { return min_length_; }
  double max_length() const { return max_length_; }

  Eigen::MatrixXcd edge_scattering(cplx k) const;
  // U(k) = S_e(k) S_v, unitary for real k.
  Eigen::MatrixXcd unitary(cplx k) const;
  Eigen::MatrixXcd secular_matrix(cplx k) const;  // U(k) - I

  cplx det(cplx k) const;  // LU with partial pivoting

  // Smallest singular value of U(k) - I, by SVD.
  double sigma_min(double k) const;
  // All singular values of U(k) - I, ascending.
  Eigen::VectorXd singular_values(double k) const;

  // Eigenvalues of U(k). Because U is normal, the singular values of U - I
  // are exactly |lambda_j - 1|; the root finder works from these.
  Eigen::VectorXcd unitary_eigenvalues(double k) const;

 private:
  MetricGraph graph_;
  BondBasis basis_;
  Eigen::MatrixXd sv_;
  Eigen::MatrixXd swapped_sv_;  // P S_v with P the bond reversal permutation
  Eigen::VectorXd bond_length_;
  double total_length_ = 0.0;
  double min_length_ = 0.0;
  double max_length_ = 0.0;
};

// sigma_min computed from unitary eigenvalues: min_j |lambda_j - 1|.
double sigma_min_from_eigenvalues(const Eigen::VectorXcd& eigenvalues);

// Plot rows for a uniform k grid (n samples from k0 to k1 inclusive).
struct SecularSample {
  double k;
  double sigma_min;
  cplx det;
};

std::vector<SecularSample> sample_secular(const SecularEvaluator& ev, double k0, double k1, int n);
// CSV with header "k,sigma_min,re_det,im_det".
std::string secular_csv(const std::vector<SecularSample>& samples);

}  // namespace qgraph
