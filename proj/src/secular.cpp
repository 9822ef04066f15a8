#include "qgraph/secular.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "qgraph/error.hpp"
#include "qgraph/text.hpp"

namespace qgraph {

Eigen::MatrixXd vertex_block(int d) {
  if (d < 1) throw Error(ErrorKind::InvalidGraph, "vertex degree must be at least 1");
  const double off = 2.0 / d;
  Eigen::MatrixXd s = Eigen::MatrixXd::Constant(d, d, off);
  s.diagonal().array() -= 1.0;
  return s;
}

Eigen::MatrixXd assemble_vertex_scattering(const MetricGraph& g) {
  const BondBasis b = bonds(g);
  Eigen::MatrixXd sv = Eigen::MatrixXd::Zero(b.size(), b.size());
  for (const auto& out : b.outgoing) {
    if (out.empty()) continue;
    const Eigen::MatrixXd block = vertex_block(static_cast<int>(out.size()));
    for (std::size_t o = 0; o < out.size(); ++o) {
      for (std::size_t i = 0; i < out.size(); ++i) {
        sv(out[o], out[i]) = block(static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(i));
      }
    }
  }
  return sv;
}

Eigen::MatrixXcd assemble_edge_scattering(const MetricGraph& g, cplx k) {
  const int n = 2 * g.edge_count();
  Eigen::MatrixXcd se = Eigen::MatrixXcd::Zero(n, n);
  const cplx i_unit(0.0, 1.0);
  for (int e = 0; e < g.edge_count(); ++e) {
    const cplx phase = std::exp(i_unit * k * g.edge(e).length.value());
    se(2 * e + 1, 2 * e) = phase;
    se(2 * e, 2 * e + 1) = phase;
  }
  return se;
}

SecularEvaluator::SecularEvaluator(MetricGraph g)
    : graph_(std::move(g)), basis_(bonds(graph_)), sv_(assemble_vertex_scattering(graph_)) {
  if (!graph_.is_concrete()) {
    throw Error(ErrorKind::UnboundParameter, "secular evaluation needs concrete edge lengths");
  }
  const int n = basis_.size();
  if (n == 0) throw Error(ErrorKind::InvalidGraph, "graph has no edges");
  swapped_sv_.resize(n, n);
  for (int r = 0; r < n; ++r) swapped_sv_.row(r) = sv_.row(BondBasis::reverse(r));
  bond_length_ = Eigen::Map<const Eigen::VectorXd>(basis_.length.data(), n);
  const auto len = graph_.lengths();
  total_length_ = 0.0;
  for (double l : len) total_length_ += l;
  min_length_ = *std::min_element(len.begin(), len.end());
  max_length_ = *std::max_element(len.begin(), len.end());
}

Eigen::MatrixXcd SecularEvaluator::edge_scattering(cplx k) const {
  return assemble_edge_scattering(graph_, k);
}

Eigen::MatrixXcd SecularEvaluator::unitary(cplx k) const {
  // (S_e S_v)[r, c] = exp(i k l_r) S_v[reverse(r), c]
  const cplx i_unit(0.0, 1.0);
  Eigen::VectorXcd phase(bond_length_.size());
  for (Eigen::Index b = 0; b < bond_length_.size(); ++b) phase(b) = std::exp(i_unit * k * bond_length_(b));
  return phase.asDiagonal() * swapped_sv_.cast<cplx>();
}

Eigen::MatrixXcd SecularEvaluator::secular_matrix(cplx k) const {
  Eigen::MatrixXcd a = unitary(k);
  a.diagonal().array() -= 1.0;
  return a;
}

cplx SecularEvaluator::det(cplx k) const { return secular_matrix(k).partialPivLu().determinant(); }

Eigen::VectorXd SecularEvaluator::singular_values(double k) const {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(secular_matrix(k));
  Eigen::VectorXd s = svd.singularValues();
  std::sort(s.begin(), s.end());
  return s;
}

double SecularEvaluator::sigma_min(double k) const { return singular_values(k)(0); }

Eigen::VectorXcd SecularEvaluator::unitary_eigenvalues(double k) const {
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(unitary(k), /*computeEigenvectors=*/false);
  return solver.eigenvalues();
}

double sigma_min_from_eigenvalues(const Eigen::VectorXcd& eigenvalues) {
  double best = std::numeric_limits<double>::infinity();
  for (const cplx& z : eigenvalues) best = std::min(best, std::abs(z - 1.0));
  return best;
}

std::vector<SecularSample> sample_secular(const SecularEvaluator& ev, double k0, double k1, int n) {
  if (n < 2) throw Error(ErrorKind::InvalidConfig, "plot needs at least 2 samples");
  if (!(k1 > k0)) throw Error(ErrorKind::InvalidConfig, "plot range must satisfy k0 < k1");
  std::vector<SecularSample> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double k = k0 + (k1 - k0) * i / (n - 1);
    out.push_back({k, ev.sigma_min(k), ev.det(k)});
  }
  return out;
}

std::string secular_csv(const std::vector<SecularSample>& samples) {
  std::ostringstream out;
  out << "k,sigma_min,re_det,im_det\n";
  for (const auto& s : samples) {
    out << format_double(s.k) << ',' << format_double(s.sigma_min) << ','
        << format_double(s.det.real()) << ',' << format_double(s.det.imag()) << '\n';
  }
  return out.str();
}

}  // namespace qgraph
