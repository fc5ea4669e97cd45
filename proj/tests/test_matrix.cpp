#include <gtest/gtest.h>

#include "daestab/matrix.hpp"
#include "daestab/rng.hpp"

namespace {

using namespace daestab;

Matrix random_matrix(int n, std::uint64_t stream) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            m(i, j) = 2.0 * CounterRng::u01(77, stream, i * 131 + j) - 1.0;
    return m;
}

TEST(Matrix, ProductAndTranspose) {
    Matrix a(2, 3, {1, 2, 3, 4, 5, 6});
    Matrix b(3, 2, {7, 8, 9, 10, 11, 12});
    Matrix c = a * b;
    EXPECT_DOUBLE_EQ(c(0, 0), 58.0);
    EXPECT_DOUBLE_EQ(c(0, 1), 64.0);
    EXPECT_DOUBLE_EQ(c(1, 0), 139.0);
    EXPECT_DOUBLE_EQ(c(1, 1), 154.0);
    Matrix at = a.transpose();
    EXPECT_EQ(at.rows(), 3);
    EXPECT_DOUBLE_EQ(at(2, 1), 6.0);
}

TEST(Matrix, ShapeErrors) {
    Matrix a(2, 3);
    Matrix b(2, 3);
    EXPECT_THROW(a * b, DimensionError);
    EXPECT_THROW(Matrix(2, 2, {1.0, 2.0, 3.0}), DimensionError);
}

TEST(LinearSolve, IdentityReturnsRhs) {
    Matrix b(3, 2, {1, 2, 3, 4, 5, 6});
    Matrix x = linear_solve(Matrix::identity(3), b);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 2; ++j) EXPECT_DOUBLE_EQ(x(i, j), b(i, j));
}

TEST(LinearSolve, DiagonalScalar) {
    Matrix a(1, 1, {2.0});
    Vector x = linear_solve(a, Vector{4.0});
    EXPECT_DOUBLE_EQ(x[0], 2.0);
}

TEST(LinearSolve, SingularCarriesPivot) {
    Matrix a(2, 2, {1.0, 2.0, 2.0, 4.0});
    try {
        linear_solve(a, Matrix::identity(2));
        FAIL() << "expected SingularMatrixError";
    } catch (const SingularMatrixError& e) {
        EXPECT_LT(e.pivot(), 1e-12 * a.norm_inf());
        EXPECT_EQ(e.code(), "singular");
    }
}

TEST(LinearSolve, NonSquareRejected) {
    Matrix a(2, 3);
    EXPECT_THROW(linear_solve(a, Matrix::identity(2)), DimensionError);
}

// solve-then-multiply recovers the right-hand side on random systems
TEST(LinearSolve, RandomRoundTrip) {
    for (int trial = 0; trial < 25; ++trial) {
        const int n = 1 + static_cast<int>(CounterRng::u01(5, trial, 0) * 7);
        Matrix a = random_matrix(n, 100 + trial);
        for (int i = 0; i < n; ++i) a(i, i) += 3.0; // keep it comfortably nonsingular
        Vector b(n);
        for (int i = 0; i < n; ++i) b[i] = CounterRng::u01(6, trial, i);
        Vector x = linear_solve(a, b);
        Vector r = a * x;
        for (int i = 0; i < n; ++i) EXPECT_NEAR(r[i], b[i], 1e-10 * (1.0 + norm_inf(b)));
    }
}

TEST(LinearSolve, DeterminantAndInverse) {
    Matrix a(2, 2, {3.0, 1.0, 4.0, 2.0});
    LuFactor f(a);
    EXPECT_NEAR(f.determinant(), 2.0, 1e-14);
    Matrix inv = f.inverse();
    Matrix shouldBeI = a * inv;
    EXPECT_NEAR(shouldBeI(0, 0), 1.0, 1e-14);
    EXPECT_NEAR(shouldBeI(0, 1), 0.0, 1e-14);
    EXPECT_NEAR(shouldBeI(1, 0), 0.0, 1e-14);
    EXPECT_NEAR(shouldBeI(1, 1), 1.0, 1e-14);
}

TEST(VectorOps, Norms) {
    Vector v{3.0, -4.0};
    EXPECT_DOUBLE_EQ(norm2(v), 5.0);
    EXPECT_DOUBLE_EQ(norm_inf(v), 4.0);
}

} // namespace
