#include "qstab/channel.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace qstab {

namespace {

double conservation_residual(const std::vector<Matrix>& kraus, std::size_t d, ChannelKind kind) {
    Matrix acc = Matrix::Zero(d, d);
    for (const Matrix& K : kraus)
        acc += (kind == ChannelKind::Schrodinger) ? Matrix(K.adjoint() * K)
                                                  : Matrix(K * K.adjoint());
    return spectral_norm(acc - Matrix::Identity(d, d));
}

std::size_t kraus_cap(std::size_t d) { return std::max(d * d, config().kraus_cap_min); }

}  // namespace

Matrix superoperator_from_kraus(const std::vector<Matrix>& kraus, std::size_t d) {
    Matrix S = Matrix::Zero(d * d, d * d);
    for (const Matrix& K : kraus) S += kron(K.conjugate(), K);
    return S;
}

Matrix choi_from_super(const Matrix& S, std::size_t d) {
    // Reshuffle: C[(i',j'),(i,j)] = S[(i',i),(j',j)] with column-major pairs.
    Matrix C(d * d, d * d);
    for (std::size_t ip = 0; ip < d; ++ip)
        for (std::size_t jp = 0; jp < d; ++jp)
            for (std::size_t i = 0; i < d; ++i)
                for (std::size_t j = 0; j < d; ++j)
                    C(ip + d * jp, i + d * j) = S(ip + d * i, jp + d * j);
    return C;
}

Matrix super_from_choi(const Matrix& C, std::size_t d) {
    Matrix S(d * d, d * d);
    for (std::size_t ip = 0; ip < d; ++ip)
        for (std::size_t jp = 0; jp < d; ++jp)
            for (std::size_t i = 0; i < d; ++i)
                for (std::size_t j = 0; j < d; ++j)
                    S(ip + d * i, jp + d * j) = C(ip + d * jp, i + d * j);
    return S;
}

std::vector<Matrix> kraus_from_choi(const Matrix& C, std::size_t d, double keep_tol,
                                    double neg_tol) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(C));
    const RealVector& ev = es.eigenvalues();
    if (ev.minCoeff() < -neg_tol)
        throw std::invalid_argument("kraus_from_choi: map is not completely positive");
    std::vector<Matrix> kraus;
    for (Eigen::Index k = 0; k < ev.size(); ++k) {
        if (ev(k) <= keep_tol) continue;
        Vector w = std::sqrt(ev(k)) * es.eigenvectors().col(k);
        kraus.push_back(unvec(w, d, d));
    }
    return kraus;
}

ChannelReport kraus_report(const HilbertSpace& H, const std::vector<Matrix>& kraus,
                           ChannelKind kind) {
    const std::size_t d = H.dim();
    ChannelReport rep;
    rep.tp_residual = conservation_residual(kraus, d, kind);
    Matrix S = superoperator_from_kraus(kraus, d);
    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(choi_from_super(S, d)),
                                             Eigen::EigenvaluesOnly);
    rep.min_choi_eig = es.eigenvalues().minCoeff();
    rep.idem_residual = spectral_norm(S * S - S);
    return rep;
}

// ---- Channel ----

Channel::Channel(HilbertSpace H, std::vector<Matrix> kraus, Matrix super, std::string label,
                 ChannelKind kind)
    : space_(std::move(H)),
      kraus_(std::move(kraus)),
      super_(std::move(super)),
      label_(std::move(label)),
      kind_(kind) {}

Channel Channel::from_kraus(const HilbertSpace& H, std::vector<Matrix> kraus, std::string label,
                            ChannelKind kind) {
    if (kraus.empty()) throw std::invalid_argument("Channel: empty Kraus list");
    const std::size_t d = H.dim();
    for (const Matrix& K : kraus)
        if (static_cast<std::size_t>(K.rows()) != d || static_cast<std::size_t>(K.cols()) != d)
            throw std::invalid_argument("Channel: Kraus shape mismatch");
    const double r = conservation_residual(kraus, d, kind);
    if (r > config().tol.tp)
        throw std::invalid_argument("Channel: conservation residual " + std::to_string(r));
    Matrix S = superoperator_from_kraus(kraus, d);
    return Channel(H, std::move(kraus), std::move(S), std::move(label), kind);
}

Channel Channel::from_superoperator(const HilbertSpace& H, const Matrix& S, std::string label,
                                    ChannelKind kind) {
    const std::size_t d = H.dim();
    if (static_cast<std::size_t>(S.rows()) != d * d || S.rows() != S.cols())
        throw std::invalid_argument("Channel: superoperator shape mismatch");
    auto kraus = kraus_from_choi(choi_from_super(S, d), d, config().tol.psd, config().tol.psd);
    if (kraus.empty()) throw std::invalid_argument("Channel: zero map");
    // Keep the exact superoperator; the Kraus list is a CP-truncated witness.
    const double r = conservation_residual(kraus, d, kind);
    if (r > config().tol.tp)
        throw std::invalid_argument("Channel: conservation residual " + std::to_string(r));
    return Channel(H, std::move(kraus), S, std::move(label), kind);
}

Matrix Channel::apply(const Matrix& X) const {
    Matrix out = Matrix::Zero(X.rows(), X.cols());
    for (const Matrix& K : kraus_) out.noalias() += K * X * K.adjoint();
    return out;
}

Operator Channel::apply(const Operator& X) const {
    if (X.space != space_) throw std::invalid_argument("Channel::apply: space mismatch");
    return Operator(space_, apply(X.mat));
}

DensityMatrix Channel::apply(const DensityMatrix& rho) const {
    return DensityMatrix::trusted(apply(rho.op()));
}

ChannelReport Channel::validate() const {
    ChannelReport rep;
    rep.tp_residual = conservation_residual(kraus_, space_.dim(), kind_);
    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitize(choi_from_super(super_, space_.dim())),
                                             Eigen::EigenvaluesOnly);
    rep.min_choi_eig = es.eigenvalues().minCoeff();
    rep.idem_residual = spectral_norm(super_ * super_ - super_);
    return rep;
}

// ---- free operations ----

Channel compose(const Channel& a, const Channel& b) {
    if (a.space() != b.space()) throw std::invalid_argument("compose: space mismatch");
    if (a.kind() != b.kind()) throw std::invalid_argument("compose: kind mismatch");
    const std::size_t d = a.space().dim();
    const std::string label = a.label() + "*" + b.label();
    if (a.kraus().size() * b.kraus().size() <= kraus_cap(d)) {
        std::vector<Matrix> kraus;
        kraus.reserve(a.kraus().size() * b.kraus().size());
        for (const Matrix& A : a.kraus())
            for (const Matrix& B : b.kraus()) kraus.push_back(A * B);
        return Channel::from_kraus(a.space(), std::move(kraus), label, a.kind());
    }
    return Channel::from_superoperator(a.space(), a.superoperator() * b.superoperator(), label,
                                       a.kind());
}

Channel dual(const Channel& E) {
    std::vector<Matrix> kraus;
    kraus.reserve(E.kraus().size());
    for (const Matrix& K : E.kraus()) kraus.push_back(K.adjoint());
    const ChannelKind kind = (E.kind() == ChannelKind::Schrodinger) ? ChannelKind::Heisenberg
                                                                    : ChannelKind::Schrodinger;
    return Channel::from_kraus(E.space(), std::move(kraus), E.label() + "^dag", kind);
}

Channel mixture(const std::vector<Channel>& channels, const std::vector<double>& probs) {
    if (channels.empty() || channels.size() != probs.size())
        throw std::invalid_argument("mixture: size mismatch");
    double sum = 0.0;
    for (double q : probs) {
        if (q < 0.0) throw std::invalid_argument("mixture: negative weight");
        sum += q;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("mixture: weights must sum to 1");
    std::vector<Matrix> kraus;
    for (std::size_t j = 0; j < channels.size(); ++j) {
        if (channels[j].space() != channels.front().space())
            throw std::invalid_argument("mixture: space mismatch");
        for (const Matrix& K : channels[j].kraus()) kraus.push_back(std::sqrt(probs[j]) * K);
    }
    const std::size_t d = channels.front().space().dim();
    if (kraus.size() <= kraus_cap(d))
        return Channel::from_kraus(channels.front().space(), std::move(kraus), "mixture");
    Matrix S = Matrix::Zero(d * d, d * d);
    for (std::size_t j = 0; j < channels.size(); ++j) S += probs[j] * channels[j].superoperator();
    return Channel::from_superoperator(channels.front().space(), S, "mixture");
}

Channel embed_neighborhood(const Channel& local, const HilbertSpace& H,
                           const std::vector<std::size_t>& positions) {
    if (H.sub_space(positions).dim() != local.space().dim())
        throw std::invalid_argument("embed_neighborhood: dimension mismatch");
    std::vector<Matrix> kraus;
    kraus.reserve(local.kraus().size());
    for (const Matrix& K : local.kraus())
        kraus.push_back(tensor_embed(Operator(local.space(), K), H, positions).mat);
    return Channel::from_kraus(H, std::move(kraus), local.label() + "@N", local.kind());
}

Channel compress(const Channel& E, const Matrix& V) {
    if (static_cast<std::size_t>(V.rows()) != E.space().dim() || V.cols() > V.rows())
        throw std::invalid_argument("compress: bad isometry shape");
    const std::size_t m = static_cast<std::size_t>(V.cols());
    HilbertSpace Hm({m});
    std::vector<Matrix> kraus;
    kraus.reserve(E.kraus().size());
    for (const Matrix& K : E.kraus()) kraus.push_back(V.adjoint() * K * V);
    // from_kraus validates trace preservation, which fails when range(V) is
    // not invariant for the channel.
    return Channel::from_kraus(Hm, std::move(kraus), E.label() + "|supp", E.kind());
}

Channel damped_power(const Channel& E, double lambda, std::size_t n) {
    if (lambda < 0.0 || lambda >= 1.0) throw std::invalid_argument("damped_power: bad lambda");
    if (n == 0) throw std::invalid_argument("damped_power: n must be positive");
    const std::size_t d = E.space().dim();
    const Matrix I = Matrix::Identity(d * d, d * d);
    Matrix base = (1.0 - lambda) * E.superoperator() + lambda * I;
    // Binary powering.
    Matrix acc = I;
    std::size_t k = n;
    while (k > 0) {
        if (k & 1u) acc = acc * base;
        k >>= 1u;
        if (k > 0) base = base * base;
    }
    return Channel::from_superoperator(E.space(), acc,
                                       E.label() + "~pow" + std::to_string(n), E.kind());
}

}  // namespace qstab
