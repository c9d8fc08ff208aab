#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/distributions/fisher_f.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "momentswap/csv.hpp"
#include "momentswap/dates.hpp"
#include "momentswap/error.hpp"
#include "momentswap/series.hpp"

namespace momentswap {

struct MomentSummary {
  std::size_t n = 0;
  double mean = 0.0;
  std::optional<double> stdev;
  std::optional<double> skewness;
  std::optional<double> excess_kurtosis;
  std::vector<std::string> notes;  // why a field is absent
};

// Mean, sample standard deviation (n - 1) and normalized central-moment
// skewness / excess kurtosis. The default higher moments are the
// population-style g1 and g2; `bias_corrected` gives G1 and G2.
inline MomentSummary sample_moments(std::span<const double> xs, bool bias_corrected = false) {
  const std::size_t n = xs.size();
  if (n == 0) throw InsufficientData("sample moments need at least one observation");
  MomentSummary s;
  s.n = n;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(n);
  s.mean = mean;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double x : xs) {
    const double d = x - mean, d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  const double nd = static_cast<double>(n);
  if (n >= 2)
    s.stdev = std::sqrt(m2 / (nd - 1.0));
  else
    s.notes.push_back("stdev needs n >= 2");
  m2 /= nd;
  m3 /= nd;
  m4 /= nd;
  const bool degenerate = !(m2 > 0.0) || m2 <= 1e-28 * std::max(1.0, mean * mean);
  if (n < 3) {
    s.notes.push_back("skewness needs n >= 3");
  } else if (degenerate) {
    s.notes.push_back("skewness undefined for a constant series");
  } else {
    double g1 = m3 / std::pow(m2, 1.5);
    if (bias_corrected) g1 *= std::sqrt(nd * (nd - 1.0)) / (nd - 2.0);
    s.skewness = g1;
  }
  if (n < 4) {
    s.notes.push_back("kurtosis needs n >= 4");
  } else if (degenerate) {
    s.notes.push_back("kurtosis undefined for a constant series");
  } else {
    double g2 = m4 / (m2 * m2) - 3.0;
    if (bias_corrected) g2 = ((nd + 1.0) * g2 + 6.0) * (nd - 1.0) / ((nd - 2.0) * (nd - 3.0));
    s.excess_kurtosis = g2;
  }
  return s;
}

// Moments of an h-period sum of iid base-period returns.
inline MomentSummary iid_scale(const MomentSummary& s, double h) {
  if (!(h >= 1.0)) throw ValidationError("horizon must be at least one base period");
  MomentSummary out = s;
  out.mean = s.mean * h;
  if (s.stdev) out.stdev = *s.stdev * std::sqrt(h);
  if (s.skewness) out.skewness = *s.skewness / std::sqrt(h);
  if (s.excess_kurtosis) out.excess_kurtosis = *s.excess_kurtosis / h;
  return out;
}

// z-scores using the sample standard deviation.
inline std::vector<double> standardize(std::span<const double> xs) {
  const auto s = sample_moments(xs);
  if (!s.stdev || !(*s.stdev > 0.0))
    throw ValidationError("cannot standardise a series with zero variance");
  std::vector<double> out;
  out.reserve(xs.size());
  for (double x : xs) out.push_back((x - s.mean) / *s.stdev);
  return out;
}

struct CorrelationResult {
  std::vector<std::string> names;
  Eigen::MatrixXd rho;
  std::size_t n_obs = 0;
  std::vector<std::pair<std::size_t, std::size_t>> undefined;  // zero-variance pairs
};

// Pairwise Pearson correlations of equally long, aligned columns.
inline CorrelationResult correlation_matrix(const std::vector<std::vector<double>>& cols,
                                            std::vector<std::string> names = {}) {
  const std::size_t k = cols.size();
  if (k == 0) throw InsufficientData("no series to correlate");
  const std::size_t n = cols.front().size();
  for (const auto& c : cols)
    if (c.size() != n) throw DimensionError("series must be aligned to equal length");
  if (n < 2) throw InsufficientData("correlation needs at least two overlapping observations");
  CorrelationResult r;
  r.names = std::move(names);
  r.n_obs = n;
  r.rho = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(k));
  std::vector<Eigen::VectorXd> z;
  std::vector<bool> ok(k);
  for (std::size_t a = 0; a < k; ++a) {
    Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(cols[a].data(), static_cast<Eigen::Index>(n));
    v.array() -= v.mean();
    const double norm = v.norm();
    ok[a] = norm > 0.0;
    z.push_back(ok[a] ? Eigen::VectorXd(v / norm) : v);
  }
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = a; b < k; ++b) {
      const auto ia = static_cast<Eigen::Index>(a), ib = static_cast<Eigen::Index>(b);
      if (!ok[a] || !ok[b]) {
        r.rho(ia, ib) = r.rho(ib, ia) = std::numeric_limits<double>::quiet_NaN();
        r.undefined.emplace_back(a, b);
        continue;
      }
      if (a == b) continue;
      const double c = std::clamp(z[a].dot(z[b]), -1.0, 1.0);
      r.rho(ia, ib) = r.rho(ib, ia) = c;
    }
  return r;
}

// Aligns dated series on their common dates, then correlates.
inline CorrelationResult correlation_matrix(const std::vector<std::vector<DatedValue>>& series,
                                            std::vector<std::string> names = {}) {
  std::map<Date, std::vector<double>> rows;
  std::map<Date, std::size_t> seen;
  for (std::size_t s = 0; s < series.size(); ++s)
    for (const auto& dv : series[s]) ++seen[dv.date];
  std::vector<std::vector<double>> cols(series.size());
  std::vector<Date> common;
  for (const auto& [d, c] : seen)
    if (c == series.size()) common.push_back(d);
  for (std::size_t s = 0; s < series.size(); ++s) {
    std::map<Date, double> m;
    for (const auto& dv : series[s]) m[dv.date] = dv.value;
    for (Date d : common) cols[s].push_back(m[d]);
  }
  return correlation_matrix(cols, std::move(names));
}

// Lag-1 sample autocorrelation and its large-sample standard error 1/sqrt(n).
inline std::pair<double, double> lag1_autocorrelation(std::span<const double> xs) {
  const std::size_t n = xs.size();
  if (n < 3) throw InsufficientData("autocorrelation needs at least three observations");
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(n);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    den += (xs[i] - mean) * (xs[i] - mean);
    if (i > 0) num += (xs[i] - mean) * (xs[i - 1] - mean);
  }
  if (!(den > 0.0)) throw ValidationError("autocorrelation undefined for a constant series");
  return {num / den, 1.0 / std::sqrt(static_cast<double>(n))};
}

enum class CovarianceType { classical, hc1 };

struct RegressionResult {
  std::vector<std::string> names;
  Eigen::VectorXd coefficients;
  Eigen::VectorXd std_errors;
  Eigen::VectorXd t_stats;
  Eigen::VectorXd p_values;
  Eigen::VectorXd residuals;
  double r2 = 0.0;
  double adjusted_r2 = 0.0;
  double rss = 0.0;
  std::size_t n_obs = 0;
  bool restricted = false;
  // Restriction beta_s = beta_g = beta_m = 0, restricted vs unrestricted.
  double f_stat = 0.0;
  double f_p_value = 1.0;

  double coef(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return coefficients(static_cast<Eigen::Index>(i));
    throw ValidationError("no coefficient named '" + name + "'");
  }
  double se(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i)
      if (names[i] == name) return std_errors(static_cast<Eigen::Index>(i));
    throw ValidationError("no coefficient named '" + name + "'");
  }
};

// OLS by column-pivoted Householder QR. Fails with the names of the columns
// spanning the near-null direction when the column-scaled design has a
// condition number above `max_condition`.
inline RegressionResult ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                            std::vector<std::string> names,
                            CovarianceType cov = CovarianceType::classical,
                            double max_condition = 1e10) {
  const Eigen::Index n = X.rows(), k = X.cols();
  if (y.size() != n) throw DimensionError("response and design differ in length");
  if (static_cast<Eigen::Index>(names.size()) != k) throw DimensionError("one name per column");
  if (n <= k) throw InsufficientData("need more observations than parameters");

  Eigen::VectorXd col_norm = X.colwise().norm().transpose();
  for (Eigen::Index j = 0; j < k; ++j)
    if (!(col_norm(j) > 0.0)) throw CollinearityError("collinear design: column '" + names[j] + "' is zero");
  const Eigen::MatrixXd Xs = X * col_norm.cwiseInverse().asDiagonal();
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(Xs, Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double cond = sv(0) / sv(k - 1);
  if (!(cond <= max_condition)) {
    const Eigen::VectorXd v = svd.matrixV().col(k - 1);
    std::string cols;
    for (Eigen::Index j = 0; j < k; ++j)
      if (std::abs(v(j)) > 0.1) cols += (cols.empty() ? "" : ", ") + names[j];
    throw CollinearityError("collinear design (condition number " + format_double(cond) +
                            "): columns " + cols);
  }

  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  RegressionResult r;
  r.names = std::move(names);
  r.n_obs = static_cast<std::size_t>(n);
  r.coefficients = qr.solve(y);
  r.residuals = y - X * r.coefficients;
  r.rss = r.residuals.squaredNorm();
  const double tss = (y.array() - y.mean()).matrix().squaredNorm();
  r.r2 = tss > 0.0 ? 1.0 - r.rss / tss : 1.0;
  r.adjusted_r2 = 1.0 - (1.0 - r.r2) * static_cast<double>(n - 1) / static_cast<double>(n - k);

  // (X'X)^-1 = P R^-1 R^-T P'
  const Eigen::MatrixXd R = qr.matrixR().topLeftCorner(k, k).triangularView<Eigen::Upper>();
  const Eigen::MatrixXd Rinv =
      R.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(k, k));
  const auto& P = qr.colsPermutation();
  const Eigen::MatrixXd XtXinv = P * (Rinv * Rinv.transpose()) * P.transpose();
  const double dof = static_cast<double>(n - k);
  Eigen::MatrixXd V;
  if (cov == CovarianceType::classical) {
    V = XtXinv * (r.rss / dof);
  } else {
    const Eigen::MatrixXd meat = X.transpose() * r.residuals.array().square().matrix().asDiagonal() * X;
    V = XtXinv * meat * XtXinv * (static_cast<double>(n) / dof);
  }
  r.std_errors = V.diagonal().cwiseMax(0.0).cwiseSqrt();
  r.t_stats = r.coefficients.cwiseQuotient(r.std_errors);
  r.p_values.resize(k);
  const boost::math::students_t tdist(dof);
  for (Eigen::Index j = 0; j < k; ++j) {
    const double t = r.t_stats(j);
    r.p_values(j) = std::isfinite(t) ? 2.0 * boost::math::cdf(boost::math::complement(tdist, std::abs(t)))
                                     : 0.0;
  }
  return r;
}

struct FactorInputs {
  std::vector<double> er;        // market excess return
  std::vector<double> size;      // SMB
  std::vector<double> growth;    // HML
  std::vector<double> momentum;  // MOM
};

struct RegressionOptions {
  bool restricted = false;
  CovarianceType covariance = CovarianceType::classical;
  bool standardize = true;
  // Square ER after standardising it (default) or square the raw ER and
  // standardise the square like any other regressor.
  bool square_standardized_er = true;
  double max_condition = 1e10;
};

// pi = alpha + b_ER ER + b_ER2 ER^2 + b_s SMB + b_g HML + b_m MOM + e. The
// F statistic always tests b_s = b_g = b_m = 0 by comparing the restricted
// and unrestricted fits; the returned coefficients are those of the fit
// selected by `restricted`.
inline RegressionResult ols_factor_regression(std::span<const double> y, const FactorInputs& f,
                                              const RegressionOptions& opt = {}) {
  const std::size_t n = y.size();
  if (f.er.size() != n || f.size.size() != n || f.growth.size() != n || f.momentum.size() != n)
    throw DimensionError("factors must be aligned to the response");
  if (n <= 6) throw InsufficientData("need more observations than parameters");
  auto prep = [&](std::span<const double> v) {
    return opt.standardize ? standardize(v) : std::vector<double>(v.begin(), v.end());
  };
  const auto yy = prep(y);
  const auto er = prep(f.er);
  std::vector<double> er2(n);
  if (opt.square_standardized_er || !opt.standardize) {
    for (std::size_t i = 0; i < n; ++i) er2[i] = er[i] * er[i];
  } else {
    for (std::size_t i = 0; i < n; ++i) er2[i] = f.er[i] * f.er[i];
    er2 = standardize(er2);
  }
  const auto smb = prep(f.size), hml = prep(f.growth), mom = prep(f.momentum);

  const auto N = static_cast<Eigen::Index>(n);
  Eigen::MatrixXd Xu(N, 6);
  for (Eigen::Index i = 0; i < N; ++i)
    Xu.row(i) << 1.0, er[i], er2[i], smb[i], hml[i], mom[i];
  const Eigen::Map<const Eigen::VectorXd> Y(yy.data(), N);
  const std::vector<std::string> names{"alpha", "beta_ER", "beta_ER2", "beta_s", "beta_g", "beta_m"};
  auto full = ols(Xu, Y, names, opt.covariance, opt.max_condition);
  auto restr = ols(Xu.leftCols(3), Y, {names.begin(), names.begin() + 3}, opt.covariance,
                   opt.max_condition);
  const double dof = static_cast<double>(n - 6);
  const double F = std::max(0.0, (restr.rss - full.rss) / 3.0) / (full.rss / dof);
  double p = 1.0;
  if (std::isfinite(F) && full.rss > 0.0) {
    const boost::math::fisher_f fd(3.0, dof);
    p = boost::math::cdf(boost::math::complement(fd, F));
  } else if (!(full.rss > 0.0)) {
    p = 0.0;
  }
  RegressionResult& out = opt.restricted ? restr : full;
  out.restricted = opt.restricted;
  out.f_stat = F;
  out.f_p_value = p;
  return out;
}

struct FactorRow {
  Date date;
  double mkt_rf = 0.0;
  double smb = 0.0;
  double hml = 0.0;
  double mom = 0.0;
  double rf = 0.0;
};

// Daily research factor file: free text preamble, a header line containing
// Mkt-RF, then rows starting with a yyyymmdd date. Reading stops at the first
// non-date line after the data begins. The momentum column may be called
// Mom, MOM, WML or UMD; it may also be absent, in which case it is zero.
inline std::vector<FactorRow> load_factor_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open factor file '" + path.string() + "'");
  std::string line;
  std::size_t line_no = 0;
  std::vector<std::string> header;
  char delim = ',';
  std::vector<FactorRow> out;
  auto find = [&](std::initializer_list<const char*> keys) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i) {
      std::string h = header[i];
      std::transform(h.begin(), h.end(), h.begin(), ::tolower);
      for (const char* k : keys) {
        std::string kk = k;
        std::transform(kk.begin(), kk.end(), kk.begin(), ::tolower);
        if (h == kk) return i;
      }
    }
    return std::nullopt;
  };
  std::optional<std::size_t> c_mkt, c_smb, c_hml, c_mom, c_rf;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (header.empty()) {
      if (line.find("Mkt-RF") == std::string::npos) continue;
      delim = line.find(',') != std::string::npos ? ',' : (line.find('\t') != std::string::npos ? '\t' : ' ');
      if (delim == ' ') {
        std::istringstream ss(line);
        for (std::string tok; ss >> tok;) header.push_back(tok);
        header.insert(header.begin(), "date");
      } else {
        header = detail::split_line(line, delim);
        if (!header.empty() && detail::trim(header[0]).empty()) header[0] = "date";
      }
      for (auto& h : header) h = std::string(detail::trim(h));
      c_mkt = find({"Mkt-RF"});
      c_smb = find({"SMB"});
      c_hml = find({"HML"});
      c_mom = find({"Mom", "WML", "UMD"});
      c_rf = find({"RF"});
      if (!c_smb || !c_hml) throw DatasetError(path.string() + ": factor header lacks SMB or HML");
      continue;
    }
    std::vector<std::string> f;
    if (delim == ' ') {
      std::istringstream ss(line);
      for (std::string tok; ss >> tok;) f.push_back(tok);
    } else {
      f = detail::split_line(line, delim);
    }
    if (f.empty() || detail::trim(f[0]).size() != 8 ||
        !std::all_of(f[0].begin(), f[0].end(), [](char ch) { return std::isdigit(ch) || ch == ' '; })) {
      if (!out.empty()) break;
      continue;
    }
    try {
      FactorRow r;
      r.date = parse_date(detail::trim(f.at(0)));
      r.mkt_rf = parse_double(f.at(*c_mkt));
      r.smb = parse_double(f.at(*c_smb));
      r.hml = parse_double(f.at(*c_hml));
      if (c_mom) r.mom = parse_double(f.at(*c_mom));
      if (c_rf) r.rf = parse_double(f.at(*c_rf));
      out.push_back(r);
    } catch (const std::exception& e) {
      throw RowError(path.string(), line_no, e.what());
    }
  }
  if (header.empty()) throw DatasetError(path.string() + ": no header containing Mkt-RF");
  if (out.empty()) throw DatasetError(path.string() + ": no dated factor rows");
  return out;
}

// Inner join of a dated series with factor rows, restricted to [from, to].
struct AlignedRegressionData {
  std::vector<Date> dates;
  std::vector<double> y;
  FactorInputs factors;
};

inline AlignedRegressionData align_with_factors(std::span<const DatedValue> series,
                                                std::span<const FactorRow> factors,
                                                std::optional<Date> from = std::nullopt,
                                                std::optional<Date> to = std::nullopt) {
  std::map<Date, const FactorRow*> by_date;
  for (const auto& f : factors) by_date[f.date] = &f;
  AlignedRegressionData out;
  for (const auto& dv : series) {
    if ((from && dv.date < *from) || (to && dv.date > *to)) continue;
    auto it = by_date.find(dv.date);
    if (it == by_date.end()) continue;
    out.dates.push_back(dv.date);
    out.y.push_back(dv.value);
    out.factors.er.push_back(it->second->mkt_rf);
    out.factors.size.push_back(it->second->smb);
    out.factors.growth.push_back(it->second->hml);
    out.factors.momentum.push_back(it->second->mom);
  }
  return out;
}

}  // namespace momentswap
