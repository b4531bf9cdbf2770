#pragma once

// Reference computations for the tests. Everything here is deliberately
// naive: direct sums, brute-force powers and explicit enumeration, sharing
// no code paths with the library beyond the matrix type.

#include <Eigen/Dense>

#include <cstdint>
#include <set>
#include <tuple>
#include <vector>

namespace oracle {

using M = Eigen::MatrixXcd;

inline M power(const M& t, int n) {
  M out = M::Identity(t.rows(), t.cols());
  for (int k = 0; k < n; ++k) out = out * t;
  return out;
}

/// (1/N) sum_{n<N} T*^n T^n by explicit powers.
inline M cesaro(const M& t, int n) {
  M sum = M::Zero(t.rows(), t.cols());
  for (int k = 0; k < n; ++k) {
    M p = power(t, k);
    sum += p.adjoint() * p;
  }
  return sum / static_cast<double>(n);
}

/// (1/(2N+1)) sum_{|n|<=N} T*^n T^n.
inline M symmetric(const M& t, int n) {
  M inv = t.inverse();
  M sum = M::Zero(t.rows(), t.cols());
  for (int k = -n; k <= n; ++k) {
    M p = k >= 0 ? power(t, k) : power(inv, -k);
    sum += p.adjoint() * p;
  }
  return sum / static_cast<double>(2 * n + 1);
}

inline double lambda_max(const M& h) {
  Eigen::SelfAdjointEigenSolver<M> s(h, Eigen::EigenvaluesOnly);
  return s.eigenvalues().maxCoeff();
}

inline double lambda_min(const M& h) {
  Eigen::SelfAdjointEigenSolver<M> s(h, Eigen::EigenvaluesOnly);
  return s.eigenvalues().minCoeff();
}

inline double norm2(const M& m) {
  Eigen::JacobiSVD<M> svd(m);
  return svd.singularValues()(0);
}

/// Heisenberg element (a,b,c) as the unipotent matrix [[1,a,c],[0,1,b],[0,0,1]].
inline Eigen::Matrix3d heisenberg_matrix(std::int64_t a, std::int64_t b, std::int64_t c) {
  Eigen::Matrix3d m = Eigen::Matrix3d::Identity();
  m(0, 1) = static_cast<double>(a);
  m(1, 2) = static_cast<double>(b);
  m(0, 2) = static_cast<double>(c);
  return m;
}

using Point = std::vector<std::int64_t>;

/// {-n..n}^d as an ordered set.
inline std::set<Point> int_box(int d, std::int64_t n) {
  std::set<Point> out{Point{}};
  for (int i = 0; i < d; ++i) {
    std::set<Point> next;
    for (const Point& p : out)
      for (std::int64_t v = -n; v <= n; ++v) {
        Point q = p;
        q.push_back(v);
        next.insert(q);
      }
    out = std::move(next);
  }
  return out;
}

/// |F + s Δ F| for a set of lattice points.
inline std::size_t symdiff_after_shift(const std::set<Point>& f, const Point& s) {
  std::set<Point> shifted;
  for (Point p : f) {
    for (std::size_t i = 0; i < p.size(); ++i) p[i] += s[i];
    shifted.insert(p);
  }
  std::size_t count = 0;
  for (const Point& p : f) count += shifted.count(p) ? 0 : 1;
  for (const Point& p : shifted) count += f.count(p) ? 0 : 1;
  return count;
}

}  // namespace oracle
