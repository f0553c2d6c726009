#include "cimpf/linalg.hpp"

#include <cmath>
#include <string>
#include <utility>

#include <Eigen/SparseLU>

#include "cimpf/error.hpp"

namespace cimpf {

namespace {

constexpr const char* kSingularHint =
    "the network likely lacks an earth reference (floating island, ungrounded delta winding or "
    "transformer without shunt); increase --shunt-floor or ground a neutral";

void check_rhs(std::size_t expected, std::size_t actual) {
    if (expected != actual) {
        throw Error(ErrorCode::DimensionMismatch, "right-hand side has length " + std::to_string(actual) +
                                                      ", expected " + std::to_string(expected));
    }
}

class EmptyFactorization final : public Factorization {
public:
    [[nodiscard]] std::size_t size() const noexcept override { return 0; }
    [[nodiscard]] ComplexVector solve(std::span<const Complex> b) const override {
        check_rhs(0, b.size());
        return {};
    }
};

class DenseLu final : public Factorization {
public:
    DenseLu(Eigen::MatrixXcd lu, std::vector<Eigen::Index> pivots) : lu_(std::move(lu)), pivots_(std::move(pivots)) {}

    [[nodiscard]] std::size_t size() const noexcept override { return static_cast<std::size_t>(lu_.rows()); }

    [[nodiscard]] ComplexVector solve(std::span<const Complex> b) const override {
        check_rhs(size(), b.size());
        const Eigen::Index n = lu_.rows();
        ComplexVector x(b.begin(), b.end());
        for (Eigen::Index k = 0; k < n; ++k) std::swap(x[k], x[pivots_[k]]);
        for (Eigen::Index i = 1; i < n; ++i) {
            Complex sum = x[i];
            for (Eigen::Index j = 0; j < i; ++j) sum -= lu_(i, j) * x[j];
            x[i] = sum;
        }
        for (Eigen::Index i = n - 1; i >= 0; --i) {
            Complex sum = x[i];
            for (Eigen::Index j = i + 1; j < n; ++j) sum -= lu_(i, j) * x[j];
            x[i] = sum / lu_(i, i);
        }
        return x;
    }

private:
    Eigen::MatrixXcd lu_;
    // Row k was swapped with row pivots_[k] at elimination step k.
    std::vector<Eigen::Index> pivots_;
};

class SparseLu final : public Factorization {
public:
    using Solver = Eigen::SparseLU<SparseComplexMatrix::Storage, Eigen::COLAMDOrdering<int>>;

    SparseLu(std::unique_ptr<Solver> solver, std::size_t n) : solver_(std::move(solver)), n_(n) {}

    [[nodiscard]] std::size_t size() const noexcept override { return n_; }

    [[nodiscard]] ComplexVector solve(std::span<const Complex> b) const override {
        check_rhs(n_, b.size());
        const Eigen::Map<const Eigen::VectorXcd> rhs(b.data(), static_cast<Eigen::Index>(b.size()));
        const Eigen::VectorXcd x = solver_->solve(rhs);
        return ComplexVector(x.data(), x.data() + x.size());
    }

private:
    std::unique_ptr<Solver> solver_;
    std::size_t n_;
};

}  // namespace

SparseComplexMatrix SparseComplexMatrix::from_triplets(const TripletList& triplets) {
    std::vector<Eigen::Triplet<Complex, int>> entries;
    entries.reserve(triplets.entries().size());
    for (const Triplet& t : triplets.entries()) {
        if (t.row >= triplets.rows() || t.col >= triplets.cols()) {
            throw Error(ErrorCode::IndexOutOfBounds, "entry (" + std::to_string(t.row) + ", " + std::to_string(t.col) +
                                                         ") outside " + std::to_string(triplets.rows()) + "×" +
                                                         std::to_string(triplets.cols()));
        }
        entries.emplace_back(static_cast<int>(t.row), static_cast<int>(t.col), t.value);
    }
    Storage storage(static_cast<Eigen::Index>(triplets.rows()), static_cast<Eigen::Index>(triplets.cols()));
    storage.setFromTriplets(entries.begin(), entries.end());
    storage.makeCompressed();
    return SparseComplexMatrix(std::move(storage));
}

Eigen::MatrixXcd SparseComplexMatrix::to_dense() const {
    return Eigen::MatrixXcd(storage_);
}

ComplexVector SparseComplexMatrix::multiply(std::span<const Complex> x) const {
    if (x.size() != cols()) {
        throw Error(ErrorCode::DimensionMismatch, "vector of length " + std::to_string(x.size()) +
                                                      " does not match " + std::to_string(cols()) + " columns");
    }
    ComplexVector y(rows(), Complex{});
    for (int col = 0; col < storage_.outerSize(); ++col) {
        for (Storage::InnerIterator it(storage_, col); it; ++it) {
            y[static_cast<std::size_t>(it.row())] += it.value() * x[static_cast<std::size_t>(col)];
        }
    }
    return y;
}

double SparseComplexMatrix::max_abs() const noexcept {
    double m = 0.0;
    for (int k = 0; k < storage_.nonZeros(); ++k) m = std::max(m, std::abs(storage_.valuePtr()[k]));
    return m;
}

std::string_view to_string(EngineKind kind) noexcept {
    return kind == EngineKind::Dense ? "dense" : "sparse";
}

std::unique_ptr<Factorization> LinearEngine::factorize(const SparseComplexMatrix& a) {
    ++factorize_count_;
    if (a.rows() != a.cols()) {
        throw Error(ErrorCode::DimensionMismatch,
                    "cannot factorize a " + std::to_string(a.rows()) + "×" + std::to_string(a.cols()) + " matrix");
    }
    if (a.rows() == 0) return std::make_unique<EmptyFactorization>();

    auto factorization = do_factorize(a);

    // Pivots that are tiny but not exactly zero slip through both backends;
    // a solve against a known vector exposes them as a blown-up forward error.
    const std::size_t n = a.rows();
    ComplexVector probe(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i);
        probe[i] = Complex(1.0 + 0.5 * std::sin(t + 1.0), 0.25 * std::cos(2.0 * t + 1.0));
    }
    const ComplexVector x = factorization->solve(a.multiply(probe));
    double error = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = std::abs(x[i] - probe[i]);
        error = std::isfinite(e) ? std::max(error, e) : INFINITY;
    }
    if (!(error <= 1e-2)) {
        throw Error(ErrorCode::SingularMatrix,
                    "matrix is numerically singular (probe error " + std::to_string(error) + "); " + kSingularHint);
    }
    return factorization;
}

std::unique_ptr<Factorization> DenseLuEngine::do_factorize(const SparseComplexMatrix& a) const {
    Eigen::MatrixXcd lu = a.to_dense();
    const Eigen::Index n = lu.rows();
    std::vector<Eigen::Index> pivots(static_cast<std::size_t>(n));
    for (Eigen::Index k = 0; k < n; ++k) {
        Eigen::Index pivot = k;
        double best = std::abs(lu(k, k));
        for (Eigen::Index i = k + 1; i < n; ++i) {
            const double v = std::abs(lu(i, k));
            if (v > best) {
                best = v;
                pivot = i;
            }
        }
        if (best == 0.0) {
            throw Error(ErrorCode::SingularMatrix, "zero pivot in column " + std::to_string(k) + "; " + kSingularHint);
        }
        pivots[static_cast<std::size_t>(k)] = pivot;
        if (pivot != k) lu.row(k).swap(lu.row(pivot));
        for (Eigen::Index i = k + 1; i < n; ++i) {
            const Complex factor = lu(i, k) / lu(k, k);
            lu(i, k) = factor;
            if (factor == Complex{}) continue;
            for (Eigen::Index j = k + 1; j < n; ++j) lu(i, j) -= factor * lu(k, j);
        }
    }
    return std::make_unique<DenseLu>(std::move(lu), std::move(pivots));
}

std::unique_ptr<Factorization> SparseLuEngine::do_factorize(const SparseComplexMatrix& a) const {
    auto solver = std::make_unique<SparseLu::Solver>();
    solver->analyzePattern(a.storage());
    solver->factorize(a.storage());
    if (solver->info() != Eigen::Success) {
        throw Error(ErrorCode::SingularMatrix, "sparse LU failed (" + solver->lastErrorMessage() + "); " + kSingularHint);
    }
    return std::make_unique<SparseLu>(std::move(solver), a.rows());
}

std::unique_ptr<LinearEngine> make_engine(EngineKind kind) {
    if (kind == EngineKind::Dense) return std::make_unique<DenseLuEngine>();
    return std::make_unique<SparseLuEngine>();
}

double inf_norm(std::span<const Complex> x) noexcept {
    double m = 0.0;
    for (const Complex& v : x) m = std::max(m, std::abs(v));
    return m;
}

}  // namespace cimpf
