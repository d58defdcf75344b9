#pragma once

#include "qstab/operator.hpp"

namespace qstab {

// Schrodinger channels are trace preserving; Heisenberg ones (duals) are
// unital instead. Both are completely positive.
enum class ChannelKind { Schrodinger, Heisenberg };

struct ChannelReport {
    double tp_residual = 0.0;    // ||sum K^dag K - I|| (or the unital analogue)
    double min_choi_eig = 0.0;   // most negative Choi eigenvalue
    double idem_residual = 0.0;  // ||E^2 - E|| on the vectorized space
};

class Channel {
  public:
    // Builds from a Kraus list; validates complete positivity implicitly and
    // trace preservation (or unitality) within tol.tp.
    static Channel from_kraus(const HilbertSpace& H, std::vector<Matrix> kraus,
                              std::string label = "",
                              ChannelKind kind = ChannelKind::Schrodinger);
    // Re-extracts a Kraus list from the Choi matrix of S, discarding
    // eigenvalues below tol.psd; throws if the map is not CP within tol.
    static Channel from_superoperator(const HilbertSpace& H, const Matrix& S,
                                      std::string label = "",
                                      ChannelKind kind = ChannelKind::Schrodinger);

    const HilbertSpace& space() const { return space_; }
    const std::vector<Matrix>& kraus() const { return kraus_; }
    const Matrix& superoperator() const { return super_; }
    const std::string& label() const { return label_; }
    ChannelKind kind() const { return kind_; }

    Matrix apply(const Matrix& X) const;
    Operator apply(const Operator& X) const;
    DensityMatrix apply(const DensityMatrix& rho) const;

    ChannelReport validate() const;

  private:
    Channel(HilbertSpace H, std::vector<Matrix> kraus, Matrix super, std::string label,
            ChannelKind kind);
    HilbertSpace space_;
    std::vector<Matrix> kraus_;
    Matrix super_;
    std::string label_;
    ChannelKind kind_;
};

// Superoperator matrix of a Kraus list (column-major vectorization).
Matrix superoperator_from_kraus(const std::vector<Matrix>& kraus, std::size_t d);

// Diagnostic report for a raw Kraus list, usable on lists that fail the
// Channel invariants (e.g. to inspect how far from trace preserving they are).
ChannelReport kraus_report(const HilbertSpace& H, const std::vector<Matrix>& kraus,
                           ChannelKind kind = ChannelKind::Schrodinger);

// Choi matrix of a superoperator and its inverse reshuffle.
Matrix choi_from_super(const Matrix& S, std::size_t d);
Matrix super_from_choi(const Matrix& C, std::size_t d);

// Kraus operators from a Choi matrix; eigenvalues in [-neg_tol, keep_tol] are
// dropped, anything below -neg_tol raises (not CP).
std::vector<Matrix> kraus_from_choi(const Matrix& C, std::size_t d, double keep_tol,
                                    double neg_tol);

// compose(a, b) applies b first: (a o b)(X) = a(b(X)). Falls back to
// superoperator composition with Kraus re-extraction when the product list
// would exceed the cap.
Channel compose(const Channel& a, const Channel& b);

// Heisenberg dual: Kraus adjoints, unital instead of trace preserving.
Channel dual(const Channel& E);

// Convex combination of channels with matching spaces.
Channel mixture(const std::vector<Channel>& channels, const std::vector<double>& probs);

// Lifts a channel acting on the factors at `positions` to the full space,
// acting trivially elsewhere.
Channel embed_neighborhood(const Channel& local, const HilbertSpace& H,
                           const std::vector<std::size_t>& positions);

// Compression of E to the range of the isometry V (d x m). Valid when that
// range is invariant; the result is checked to be trace preserving.
Channel compress(const Channel& E, const Matrix& V);

// n-th power of the damped map (1-lambda) E + lambda Id.
Channel damped_power(const Channel& E, double lambda, std::size_t n);

}  // namespace qstab
