#ifndef TAUT_LINALG_HPP
#define TAUT_LINALG_HPP

#include "taut/rational.hpp"

#include <Eigen/Core>

#include <vector>

namespace taut {

template <class Scalar>
using DenseMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using DenseVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

// Scales a row so that all entries become integral; no-op for integral scalar types.
template <class Derived>
void clear_denominators(Eigen::MatrixBase<Derived>&) {}

template <>
inline void clear_denominators(Eigen::MatrixBase<RationalMatrix>& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        mpz_class l = 1;
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            const mpz_class d = m(i, j).denominator();
            mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), d.get_mpz_t());
        }
        if (l != 1) m.row(i) *= Rational(l);
    }
}

template <class Scalar>
struct Echelon {
    DenseMatrix<Scalar> matrix;  // row echelon form
    std::vector<Eigen::Index> pivots;  // pivot column of each nonzero row
};

// Fraction-free (Bareiss) forward elimination, pivots chosen by column order.
template <class Scalar>
Echelon<Scalar> bareiss_echelon(DenseMatrix<Scalar> a) {
    clear_denominators(a);
    Echelon<Scalar> out;
    const Eigen::Index rows = a.rows(), cols = a.cols();
    Scalar prev(1);
    Eigen::Index r = 0;
    for (Eigen::Index c = 0; c < cols && r < rows; ++c) {
        Eigen::Index p = r;
        while (p < rows && a(p, c) == Scalar(0)) ++p;
        if (p == rows) continue;
        if (p != r) a.row(p).swap(a.row(r));
        for (Eigen::Index i = r + 1; i < rows; ++i) {
            for (Eigen::Index j = c + 1; j < cols; ++j) a(i, j) = (a(r, c) * a(i, j) - a(i, c) * a(r, j)) / prev;
            a(i, c) = Scalar(0);
        }
        prev = a(r, c);
        out.pivots.push_back(c);
        ++r;
    }
    out.matrix = std::move(a);
    return out;
}

template <class Scalar>
Eigen::Index matrix_rank(const DenseMatrix<Scalar>& a) {
    return static_cast<Eigen::Index>(bareiss_echelon(a).pivots.size());
}

// Basis of {x : a x = 0}; one vector per free column f with x_f = 1 and the
// other free coordinates 0.
template <class Scalar>
std::vector<DenseVector<Scalar>> nullspace(const DenseMatrix<Scalar>& a) {
    const Echelon<Scalar> e = bareiss_echelon(a);
    const Eigen::Index cols = a.cols();
    std::vector<bool> is_pivot(cols, false);
    for (auto c : e.pivots) is_pivot[c] = true;
    std::vector<DenseVector<Scalar>> out;
    for (Eigen::Index f = 0; f < cols; ++f) {
        if (is_pivot[f]) continue;
        DenseVector<Scalar> x = DenseVector<Scalar>::Constant(cols, Scalar(0));
        x(f) = Scalar(1);
        for (Eigen::Index i = static_cast<Eigen::Index>(e.pivots.size()) - 1; i >= 0; --i) {
            const Eigen::Index p = e.pivots[i];
            Scalar s(0);
            for (Eigen::Index j = p + 1; j < cols; ++j)
                if (x(j) != Scalar(0) && e.matrix(i, j) != Scalar(0)) s += e.matrix(i, j) * x(j);
            x(p) = -s / e.matrix(i, p);
        }
        out.push_back(std::move(x));
    }
    return out;
}

}  // namespace taut

#endif
