#include "jamaware/metrics.hpp"

#include <algorithm>
#include <numeric>

namespace jamaware {

std::vector<double> energy_detector(const Eigen::MatrixXcd& grid) {
    std::vector<double> out(static_cast<std::size_t>(grid.cols()));
    for (Eigen::Index t = 0; t < grid.cols(); ++t) out[static_cast<std::size_t>(t)] = energy_detector(grid, t, 1);
    return out;
}

double energy_detector(const Eigen::MatrixXcd& grid, Eigen::Index first_slot, Eigen::Index n_slots) {
    if (grid.rows() == 0 || n_slots <= 0) throw EmptyInputError("energy detector needs a non-empty window");
    if (first_slot < 0 || first_slot + n_slots > grid.cols()) throw std::out_of_range("energy detector window");
    return grid.middleCols(first_slot, n_slots).cwiseAbs2().mean();
}

RocCurve roc(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) {
    if (scores.size() != labels.size()) throw LengthMismatchError("roc: scores and labels differ in length");
    const auto n_pos = static_cast<double>(std::count(labels.begin(), labels.end(), 1));
    const auto n_neg = static_cast<double>(labels.size()) - n_pos;
    if (n_pos == 0 || n_neg == 0) throw EmptyInputError("roc needs both classes");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RocCurve c;
    c.points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
    double tp = 0, fp = 0;
    c.acc = n_neg / (n_pos + n_neg);
    c.best_threshold = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < order.size();) {
        const double s = scores[order[i]];
        // Consume the whole group of equal scores before emitting a point.
        while (i < order.size() && scores[order[i]] == s) {
            (labels[order[i]] ? tp : fp) += 1;
            ++i;
        }
        RocPoint p{s, fp / n_neg, tp / n_pos};
        const auto& prev = c.points.back();
        c.auc += (p.p_fa - prev.p_fa) * 0.5 * (p.p_d + prev.p_d);
        // Declaring H1 for scores >= s.
        const double acc = (tp + (n_neg - fp)) / (n_pos + n_neg);
        if (acc > c.acc) {
            c.acc = acc;
            c.best_threshold = s;
        }
        c.points.push_back(p);
    }
    return c;
}

double mse(const Vec& a, const Vec& b) {
    if (a.size() != b.size()) throw LengthMismatchError("mse: lengths differ");
    if (a.size() == 0) throw EmptyInputError("mse of empty vectors");
    return (a - b).squaredNorm() / static_cast<double>(a.size());
}

double mse(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw LengthMismatchError("mse: shapes differ");
    if (a.size() == 0) throw EmptyInputError("mse of empty grids");
    return (a - b).cwiseAbs2().mean();
}

double mse(const std::vector<double>& a, const std::vector<double>& b) {
    return mse(Vec(Eigen::Map<const Vec>(a.data(), static_cast<Eigen::Index>(a.size()))),
               Vec(Eigen::Map<const Vec>(b.data(), static_cast<Eigen::Index>(b.size()))));
}

double ber(const Bits& recovered, const Bits& truth) {
    if (recovered.size() != truth.size()) throw LengthMismatchError("ber: bit streams differ in length");
    if (truth.empty()) throw EmptyInputError("ber of an empty stream");
    std::size_t errors = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) errors += (recovered[i] != 0) != (truth[i] != 0);
    return static_cast<double>(errors) / static_cast<double>(truth.size());
}

double p_cc(const std::vector<int>& predictions, const std::vector<int>& truth) {
    if (predictions.size() != truth.size()) throw LengthMismatchError("p_cc: lengths differ");
    if (truth.empty()) throw EmptyInputError("p_cc of an empty sequence");
    std::size_t ok = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) ok += predictions[i] == truth[i];
    return static_cast<double>(ok) / static_cast<double>(truth.size());
}

Eigen::MatrixXi confusion(const std::vector<int>& predictions, const std::vector<int>& truth, int n_classes) {
    if (predictions.size() != truth.size()) throw LengthMismatchError("confusion: lengths differ");
    Eigen::MatrixXi m = Eigen::MatrixXi::Zero(n_classes, n_classes);
    for (std::size_t i = 0; i < truth.size(); ++i) ++m(truth[i], predictions[i]);
    return m;
}

namespace {

std::vector<double> ranks(const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
        i = j + 1;
    }
    return r;
}

}  // namespace

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw LengthMismatchError("spearman: lengths differ");
    if (a.size() < 2) throw EmptyInputError("spearman needs at least two pairs");
    const auto ra = ranks(a), rb = ranks(b);
    const Eigen::Map<const Vec> x(ra.data(), static_cast<Eigen::Index>(ra.size()));
    const Eigen::Map<const Vec> y(rb.data(), static_cast<Eigen::Index>(rb.size()));
    const Vec xc = x.array() - x.mean();
    const Vec yc = y.array() - y.mean();
    const double den = std::sqrt(xc.squaredNorm() * yc.squaredNorm());
    return den > 0.0 ? xc.dot(yc) / den : 0.0;
}

double median(std::vector<double> v) {
    if (v.empty()) throw EmptyInputError("median of an empty sequence");
    const auto mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    if (v.size() % 2) return v[mid];
    const double hi = v[mid];
    return 0.5 * (hi + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
}

double mean(const std::vector<double>& v) {
    if (v.empty()) throw EmptyInputError("mean of an empty sequence");
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double q_function(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

double ber_qpsk_analytic(double ebn0) { return q_function(std::sqrt(2.0 * ebn0)); }

double ber_qam16_analytic(double ebn0) { return 0.75 * q_function(std::sqrt(0.8 * ebn0)); }

}  // namespace jamaware
