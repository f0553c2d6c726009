#pragma once

#include <atomic>
#include <complex>
#include <cstddef>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace cimpf {

using Complex = std::complex<double>;
using ComplexVector = std::vector<Complex>;

struct Triplet {
    std::size_t row = 0;
    std::size_t col = 0;
    Complex value{};
};

/// Stamping buffer. Duplicate (row, col) entries are summed on conversion.
class TripletList {
public:
    TripletList() = default;
    TripletList(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {}

    void add(std::size_t row, std::size_t col, Complex value) { entries_.push_back({row, col, value}); }

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] const std::vector<Triplet>& entries() const noexcept { return entries_; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<Triplet> entries_;
};

/// Compressed-column complex matrix.
class SparseComplexMatrix {
public:
    using Storage = Eigen::SparseMatrix<Complex, Eigen::ColMajor, int>;

    SparseComplexMatrix() = default;
    explicit SparseComplexMatrix(Storage storage) : storage_(std::move(storage)) {}

    /// Throws IndexOutOfBounds for entries outside the stated dimensions.
    [[nodiscard]] static SparseComplexMatrix from_triplets(const TripletList& triplets);

    [[nodiscard]] std::size_t rows() const noexcept { return static_cast<std::size_t>(storage_.rows()); }
    [[nodiscard]] std::size_t cols() const noexcept { return static_cast<std::size_t>(storage_.cols()); }
    [[nodiscard]] std::size_t nonzeros() const noexcept { return static_cast<std::size_t>(storage_.nonZeros()); }

    [[nodiscard]] Eigen::MatrixXcd to_dense() const;
    [[nodiscard]] ComplexVector multiply(std::span<const Complex> x) const;
    [[nodiscard]] double max_abs() const noexcept;

    [[nodiscard]] const Storage& storage() const noexcept { return storage_; }

private:
    Storage storage_;
};

/// Result of a one-shot factorization. `solve` is const and keeps no mutable
/// state, so one factorization may be shared by concurrent callers.
class Factorization {
public:
    virtual ~Factorization() = default;

    [[nodiscard]] virtual std::size_t size() const noexcept = 0;
    /// Throws DimensionMismatch when b has the wrong length.
    [[nodiscard]] virtual ComplexVector solve(std::span<const Complex> b) const = 0;
};

enum class EngineKind { Dense, Sparse };

[[nodiscard]] std::string_view to_string(EngineKind kind) noexcept;

/// Direct solver backend. Every successful or failed `factorize` call is
/// counted so callers can check how often the system matrix was factorized.
class LinearEngine {
public:
    virtual ~LinearEngine() = default;

    /// Throws SingularMatrix (with a hint about the missing earth reference)
    /// or DimensionMismatch for non-square input.
    [[nodiscard]] std::unique_ptr<Factorization> factorize(const SparseComplexMatrix& a);

    [[nodiscard]] std::size_t factorize_count() const noexcept { return factorize_count_.load(); }
    [[nodiscard]] virtual EngineKind kind() const noexcept = 0;

protected:
    [[nodiscard]] virtual std::unique_ptr<Factorization> do_factorize(const SparseComplexMatrix& a) const = 0;

private:
    std::atomic<std::size_t> factorize_count_{0};
};

/// LU with partial pivoting on a dense copy of the matrix.
class DenseLuEngine final : public LinearEngine {
public:
    [[nodiscard]] EngineKind kind() const noexcept override { return EngineKind::Dense; }

protected:
    [[nodiscard]] std::unique_ptr<Factorization> do_factorize(const SparseComplexMatrix& a) const override;
};

/// Supernodal sparse LU with COLAMD ordering.
class SparseLuEngine final : public LinearEngine {
public:
    [[nodiscard]] EngineKind kind() const noexcept override { return EngineKind::Sparse; }

protected:
    [[nodiscard]] std::unique_ptr<Factorization> do_factorize(const SparseComplexMatrix& a) const override;
};

[[nodiscard]] std::unique_ptr<LinearEngine> make_engine(EngineKind kind);

/// ‖x‖∞ over complex moduli.
[[nodiscard]] double inf_norm(std::span<const Complex> x) noexcept;

}  // namespace cimpf
