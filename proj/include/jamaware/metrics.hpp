#pragma once

#include "jamaware/core.hpp"

#include <vector>

namespace jamaware {

struct RocPoint {
    double threshold = 0.0;
    double p_fa = 0.0;
    double p_d = 0.0;
};

struct RocCurve {
    std::vector<RocPoint> points;  // sorted by p_fa, starting at (0, 0)
    double auc = 0.0;
    double acc = 0.0;             // best accuracy over the swept thresholds
    double best_threshold = 0.0;
};

// Mean |z|^2 over every sub-carrier of each slot.
std::vector<double> energy_detector(const Eigen::MatrixXcd& grid);
double energy_detector(const Eigen::MatrixXcd& grid, Eigen::Index first_slot, Eigen::Index n_slots);

// Scores above the threshold are declared H1. Ties between a positive and a
// negative score count one half in the area.
RocCurve roc(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels);

double mse(const Vec& a, const Vec& b);
double mse(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b);
inline double rmse(const Vec& a, const Vec& b) { return std::sqrt(mse(a, b)); }
double mse(const std::vector<double>& a, const std::vector<double>& b);
inline double rmse(const std::vector<double>& a, const std::vector<double>& b) { return std::sqrt(mse(a, b)); }

double ber(const Bits& recovered, const Bits& truth);

double p_cc(const std::vector<int>& predictions, const std::vector<int>& truth);
Eigen::MatrixXi confusion(const std::vector<int>& predictions, const std::vector<int>& truth, int n_classes);

// Average ranks for ties.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

double median(std::vector<double> v);
double mean(const std::vector<double>& v);

// Gaussian tail probability.
double q_function(double x);
// Gray-coded AWGN bit error rates as a function of Eb/N0 (linear).
double ber_qpsk_analytic(double ebn0);
double ber_qam16_analytic(double ebn0);

}  // namespace jamaware
