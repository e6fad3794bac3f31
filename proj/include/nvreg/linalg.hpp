// Copyright 2026 The nvreg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#ifdef NVREG_USE_LAPACKE
#include <lapacke.h>
#endif

namespace nvreg {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr cplx kI{0.0, 1.0};

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A size or dimension guard was violated (too many spins, Hilbert space too large).
class GuardViolation : public Error {
 public:
  using Error::Error;
};

/// Product of the factor dimensions.
inline std::size_t total_dimension(std::span<const int> dims) {
  return std::accumulate(dims.begin(), dims.end(), std::size_t{1},
                         [](std::size_t acc, int d) { return acc * static_cast<std::size_t>(d); });
}

inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

inline CVector kron(const CVector& a, const CVector& b) {
  CVector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) out.segment(i * b.size(), b.size()) = a(i) * b;
  return out;
}

/// `op` acting on factor `site`, identity elsewhere.
inline CMatrix embed(const CMatrix& op, std::size_t site, std::span<const int> dims) {
  if (site >= dims.size() || op.rows() != dims[site] || op.cols() != dims[site]) {
    throw Error("embed: operator does not match factor " + std::to_string(site));
  }
  const auto left = total_dimension(dims.first(site));
  const auto right = total_dimension(dims.subspan(site + 1));
  return kron(kron(CMatrix::Identity(static_cast<Eigen::Index>(left), static_cast<Eigen::Index>(left)), op),
              CMatrix::Identity(static_cast<Eigen::Index>(right), static_cast<Eigen::Index>(right)));
}

/// Adds `coeff * A_p * B_q` to `h` without materialising the embedded operators (p != q).
inline void add_two_site(CMatrix& h, std::span<const int> dims, std::size_t p, const CMatrix& a,
                         std::size_t q, const CMatrix& b, cplx coeff) {
  if (p == q) throw Error("add_two_site: sites must differ");
  const auto d = total_dimension(dims);
  std::vector<std::size_t> stride(dims.size());
  std::size_t s = 1;
  for (std::size_t k = dims.size(); k-- > 0;) {
    stride[k] = s;
    s *= static_cast<std::size_t>(dims[k]);
  }
  const int dp = dims[p];
  const int dq = dims[q];
  for (std::size_t col = 0; col < d; ++col) {
    const int cp = static_cast<int>((col / stride[p]) % static_cast<std::size_t>(dp));
    const int cq = static_cast<int>((col / stride[q]) % static_cast<std::size_t>(dq));
    const std::size_t base = col - static_cast<std::size_t>(cp) * stride[p] - static_cast<std::size_t>(cq) * stride[q];
    for (int i = 0; i < dp; ++i) {
      const cplx ai = a(i, cp);
      if (ai == cplx{}) continue;
      for (int j = 0; j < dq; ++j) {
        const cplx bj = b(j, cq);
        if (bj == cplx{}) continue;
        const std::size_t row = base + static_cast<std::size_t>(i) * stride[p] + static_cast<std::size_t>(j) * stride[q];
        h(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) += coeff * ai * bj;
      }
    }
  }
}

inline void add_one_site(CMatrix& h, std::span<const int> dims, std::size_t p, const CMatrix& a, cplx coeff) {
  const auto d = total_dimension(dims);
  std::size_t stride = 1;
  for (std::size_t k = dims.size(); k-- > p + 1;) stride *= static_cast<std::size_t>(dims[k]);
  const int dp = dims[p];
  for (std::size_t col = 0; col < d; ++col) {
    const int cp = static_cast<int>((col / stride) % static_cast<std::size_t>(dp));
    const std::size_t base = col - static_cast<std::size_t>(cp) * stride;
    for (int i = 0; i < dp; ++i) {
      const cplx ai = a(i, cp);
      if (ai == cplx{}) continue;
      h(static_cast<Eigen::Index>(base + static_cast<std::size_t>(i) * stride), static_cast<Eigen::Index>(col)) +=
          coeff * ai;
    }
  }
}

inline double max_abs(const CMatrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

inline double hermiticity_defect(const CMatrix& m) { return max_abs(m - m.adjoint()); }

inline double unitarity_defect(const CMatrix& u) {
  return max_abs(u.adjoint() * u - CMatrix::Identity(u.rows(), u.cols()));
}

/// Eigenvalues ascending; columns of `vectors` are the orthonormal eigenvectors.
struct Eigensystem {
  RVector values;
  CMatrix vectors;
};

inline Eigensystem hermitian_eigensystem(const CMatrix& h) {
  if (h.rows() != h.cols()) throw Error("hermitian_eigensystem: matrix not square");
  Eigensystem out;
#ifdef NVREG_USE_LAPACKE
  if (h.rows() > 96) {
    // zheevr: the divide-and-conquer driver loses orthogonality on the highly
    // degenerate spectra of weakly coupled spin baths in some LAPACK builds.
    const auto n = static_cast<lapack_int>(h.rows());
    CMatrix a = h;
    out.vectors.resize(h.rows(), h.rows());
    out.values.resize(h.rows());
    lapack_int found = 0;
    std::vector<lapack_int> support(2 * static_cast<std::size_t>(n));
    const lapack_int info = LAPACKE_zheevr(
        LAPACK_COL_MAJOR, 'V', 'A', 'L', n, reinterpret_cast<lapack_complex_double*>(a.data()), n, 0.0, 0.0, 0, 0,
        0.0, &found, out.values.data(), reinterpret_cast<lapack_complex_double*>(out.vectors.data()), n,
        support.data());
    if (info == 0 && found == n) {
      // Round trip of a fixed probe vector as an orthogonality check.
      CVector probe(h.rows());
      for (Eigen::Index k = 0; k < probe.size(); ++k) probe(k) = cplx(std::cos(0.7 * k), std::sin(1.3 * k));
      const CVector back = out.vectors * (out.vectors.adjoint() * probe);
      if ((back - probe).norm() <= 1e-8 * probe.norm()) return out;
    }
  }
#endif
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(h);
  if (solver.info() != Eigen::Success) throw Error("hermitian eigensolver did not converge");
  out.values = solver.eigenvalues();
  out.vectors = solver.eigenvectors();
  return out;
}

/// Partial trace over the trailing factor of dimension `traced` of a (d_keep*traced)-dim operator.
inline CMatrix trace_out_trailing(const CMatrix& rho, Eigen::Index traced) {
  const Eigen::Index keep = rho.rows() / traced;
  CMatrix out = CMatrix::Zero(keep, keep);
  for (Eigen::Index a = 0; a < keep; ++a) {
    for (Eigen::Index b = 0; b < keep; ++b) {
      cplx acc{};
      for (Eigen::Index c = 0; c < traced; ++c) acc += rho(a * traced + c, b * traced + c);
      out(a, b) = acc;
    }
  }
  return out;
}

}  // namespace nvreg
