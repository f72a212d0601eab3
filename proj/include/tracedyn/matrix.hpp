// Dense square matrices over complex numbers or Grassmann elements.
//
// The product is written index-by-index so the left/right factor order of
// the scalar entries is preserved; that is what keeps Grassmann-valued
// matrix algebra honest (Eigen-style kernels may reorder scalar products).
#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "tracedyn/grassmann.hpp"

namespace tracedyn {

template <class T>
struct ScalarOps;

template <>
struct ScalarOps<Complex> {
    static Complex conj_entry(const Complex& z) { return std::conj(z); }
    static double coeff_sq(const Complex& z) { return std::norm(z); }
    static Complex body(const Complex& z) { return z; }
    static Complex zero_like(const Complex&) { return Complex(0.0, 0.0); }
    static Complex one_like(const Complex&) { return Complex(1.0, 0.0); }
    static Complex from_complex(Complex c, const Complex&) { return c; }
    static bool finite(const Complex& z) {
        return std::isfinite(z.real()) && std::isfinite(z.imag());
    }
};

template <>
struct ScalarOps<GrassmannElement> {
    // The adjoint uses the product-preserving conjugation; see grassmann.hpp.
    static GrassmannElement conj_entry(const GrassmannElement& x) {
        return x.conj_product_preserving();
    }
    static double coeff_sq(const GrassmannElement& x) { return x.coeff_norm_sq(); }
    static Complex body(const GrassmannElement& x) { return x.body(); }
    static GrassmannElement zero_like(const GrassmannElement& x) {
        return GrassmannElement::scalar(0.0, x.generators());
    }
    static GrassmannElement one_like(const GrassmannElement& x) {
        return GrassmannElement::scalar(1.0, x.generators());
    }
    static GrassmannElement from_complex(Complex c, const GrassmannElement& proto) {
        return GrassmannElement::scalar(c, proto.generators());
    }
    static bool finite(const GrassmannElement& x) { return x.is_finite(); }
};

template <class T>
class Matrix {
public:
    Matrix() = default;
    Matrix(int n, const T& proto) : n_(n), e_(std::size_t(n) * n, ScalarOps<T>::zero_like(proto)) {}

    static Matrix zero(int n, const T& proto) { return Matrix(n, proto); }
    static Matrix identity(int n, const T& proto) {
        Matrix m(n, proto);
        for (int i = 0; i < n; ++i) m(i, i) = ScalarOps<T>::one_like(proto);
        return m;
    }

    int dim() const { return n_; }
    bool empty() const { return n_ == 0; }
    T& operator()(int i, int j) { return e_[std::size_t(i) * n_ + j]; }
    const T& operator()(int i, int j) const { return e_[std::size_t(i) * n_ + j]; }
    const T& proto() const { return e_.front(); }

    friend Matrix operator+(const Matrix& a, const Matrix& b) {
        check_dims(a, b);
        Matrix r = a;
        for (std::size_t k = 0; k < r.e_.size(); ++k) r.e_[k] += b.e_[k];
        return r;
    }
    friend Matrix operator-(const Matrix& a, const Matrix& b) {
        check_dims(a, b);
        Matrix r = a;
        for (std::size_t k = 0; k < r.e_.size(); ++k) r.e_[k] -= b.e_[k];
        return r;
    }
    Matrix operator-() const {
        Matrix r = *this;
        for (auto& x : r.e_) x = -x;
        return r;
    }
    friend Matrix operator*(const Matrix& a, Complex c) {
        Matrix r = a;
        for (auto& x : r.e_) x *= c;
        return r;
    }
    friend Matrix operator*(Complex c, const Matrix& a) { return a * c; }
    friend Matrix operator*(const Matrix& a, double c) { return a * Complex(c, 0.0); }
    friend Matrix operator*(double c, const Matrix& a) { return a * Complex(c, 0.0); }

    friend Matrix operator*(const Matrix& a, const Matrix& b) {
        check_dims(a, b);
        Matrix r(a.n_, a.e_.front());
        for (int i = 0; i < a.n_; ++i)
            for (int k = 0; k < a.n_; ++k) {
                const T& aik = a(i, k);
                for (int j = 0; j < a.n_; ++j) r(i, j) += aik * b(k, j);
            }
        return r;
    }

    Matrix& operator+=(const Matrix& b) { return *this = *this + b; }
    Matrix& operator-=(const Matrix& b) { return *this = *this - b; }

    Matrix adjoint() const {
        Matrix r(n_, e_.front());
        for (int i = 0; i < n_; ++i)
            for (int j = 0; j < n_; ++j) r(i, j) = ScalarOps<T>::conj_entry((*this)(j, i));
        return r;
    }

    T trace() const {
        T s = ScalarOps<T>::zero_like(e_.front());
        for (int i = 0; i < n_; ++i) s += (*this)(i, i);
        return s;
    }

    double fro_norm_sq() const {
        double s = 0;
        for (const auto& x : e_) s += ScalarOps<T>::coeff_sq(x);
        return s;
    }
    double fro_norm() const { return std::sqrt(fro_norm_sq()); }

    bool is_finite() const {
        for (const auto& x : e_)
            if (!ScalarOps<T>::finite(x)) return false;
        return true;
    }

private:
    int n_ = 0;
    std::vector<T> e_;

    static void check_dims(const Matrix& a, const Matrix& b) {
        if (a.n_ != b.n_) throw AlgebraMismatchError("matrix dimension mismatch");
    }
};

using CMatrix = Matrix<Complex>;
using GMatrix = Matrix<GrassmannElement>;

template <class T>
Matrix<T> commutator(const Matrix<T>& a, const Matrix<T>& b) {
    return a * b - b * a;
}
template <class T>
Matrix<T> anticommutator(const Matrix<T>& a, const Matrix<T>& b) {
    return a * b + b * a;
}

inline GMatrix promote(const CMatrix& m, int gens) {
    GMatrix r(m.dim(), GrassmannElement::scalar(0.0, gens));
    for (int i = 0; i < m.dim(); ++i)
        for (int j = 0; j < m.dim(); ++j)
            r(i, j) = GrassmannElement::scalar(m(i, j), gens);
    return r;
}

inline CMatrix body(const GMatrix& m) {
    CMatrix r(m.dim(), Complex{});
    for (int i = 0; i < m.dim(); ++i)
        for (int j = 0; j < m.dim(); ++j) r(i, j) = m(i, j).body();
    return r;
}

inline Eigen::MatrixXcd to_eigen(const CMatrix& m) {
    Eigen::MatrixXcd r(m.dim(), m.dim());
    for (int i = 0; i < m.dim(); ++i)
        for (int j = 0; j < m.dim(); ++j) r(i, j) = m(i, j);
    return r;
}

inline CMatrix from_eigen(const Eigen::MatrixXcd& m) {
    CMatrix r(int(m.rows()), Complex{});
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j) r(i, j) = m(i, j);
    return r;
}

// diag(+i x N/2, -i x N/2); squares to -1, anti-self-adjoint, traceless.
inline CMatrix i_eff_matrix(int n) {
    if (n % 2 != 0) throw ConfigError("i_eff needs even matrix dimension");
    CMatrix m(n, Complex{});
    for (int i = 0; i < n; ++i) m(i, i) = Complex(0.0, i < n / 2 ? 1.0 : -1.0);
    return m;
}

// -1/2 * i_eff * {M, i_eff}: keeps the two diagonal N/2 blocks (the sector
// commuting with i_eff), kills the off-diagonal blocks.
template <class T>
Matrix<T> eff_project(const Matrix<T>& m) {
    const int n = m.dim();
    if (n % 2 != 0) throw ConfigError("eff_project needs even matrix dimension");
    Matrix<T> r(n, m.proto());
    for (int i = 0; i < n; ++i) {
        const bool ui = i < n / 2;
        for (int j = 0; j < n; ++j) {
            if (ui == (j < n / 2)) r(i, j) = m(i, j);
        }
    }
    return r;
}

}  // namespace tracedyn
