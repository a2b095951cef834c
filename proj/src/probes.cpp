/*
 * Copyright 2026 the ehrtok authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "ehr/probes.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "ehr/kernels.hpp"
#include "ehr/util.hpp"

namespace ehr {

ZScoreStats zscore_fit(const FeatureMatrix& train) {
    if (train.rows() == 0) throw std::invalid_argument("zscore_fit: empty train");
    const std::size_t d = train.dim;
    const double n = static_cast<double>(train.rows());
    ZScoreStats stats;
    stats.mean.assign(d, 0.0);
    stats.sd.assign(d, 0.0);
    for (std::size_t i = 0; i < train.rows(); ++i) {
        kernels::axpy(1.0, train.row(i).data(), stats.mean.data(), d);
    }
    for (auto& m : stats.mean) m /= n;
    for (std::size_t i = 0; i < train.rows(); ++i) {
        const auto r = train.row(i);
        for (std::size_t j = 0; j < d; ++j) {
            const double c = r[j] - stats.mean[j];
            stats.sd[j] += c * c;
        }
    }
    for (auto& s : stats.sd) s = std::sqrt(s / n);
    return stats;
}

void zscore_apply(const ZScoreStats& stats, FeatureMatrix& m) {
    if (stats.mean.size() != m.dim)
        throw std::invalid_argument("zscore_apply: dimension mismatch");
    for (std::size_t i = 0; i < m.rows(); ++i) {
        auto r = m.row(i);
        for (std::size_t j = 0; j < m.dim; ++j) {
            const double sd = stats.sd[j];
            r[j] = sd == 0.0 ? 0.0 : (r[j] - stats.mean[j]) / sd;
        }
    }
}

double logistic_loss(const FeatureMatrix& X, const std::vector<double>& y,
                     const std::vector<double>& w, double b, double l2) {
    const std::size_t n = X.rows();
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double margin = kernels::dot(w.data(), X.row(i).data(), X.dim) + b;
        // log(1 + exp(-m)) for y=1, log(1 + exp(m)) for y=0; stable form.
        const double signed_margin = y[i] > 0.5 ? margin : -margin;
        if (signed_margin > 0) {
            loss += std::log1p(std::exp(-signed_margin));
        } else {
            loss += -signed_margin + std::log1p(std::exp(signed_margin));
        }
    }
    loss /= static_cast<double>(n);
    if (l2 > 0.0) loss += 0.5 * l2 * kernels::sum_sq(w.data(), w.size());
    return loss;
}

void logistic_gradient(const FeatureMatrix& X, const std::vector<double>& y,
                       const std::vector<double>& w, double b, double l2,
                       std::vector<double>& grad_w, double& grad_b) {
    const std::size_t n = X.rows();
    grad_w.assign(X.dim, 0.0);
    grad_b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double margin = kernels::dot(w.data(), X.row(i).data(), X.dim) + b;
        const double p = 1.0 / (1.0 + std::exp(-margin));
        const double r = (p - y[i]) / static_cast<double>(n);
        kernels::axpy(r, X.row(i).data(), grad_w.data(), X.dim);
        grad_b += r;
    }
    if (l2 > 0.0) kernels::axpy(l2, w.data(), grad_w.data(), w.size());
}

ProbeModel fit_logistic(const FeatureMatrix& X, const std::vector<double>& y,
                        double l2) {
    const std::size_t n = X.rows();
    if (n == 0 || y.size() != n)
        throw std::invalid_argument("fit_logistic: bad inputs");
    const bool has_pos = std::any_of(y.begin(), y.end(),
                                     [](double v) { return v > 0.5; });
    const bool has_neg = std::any_of(y.begin(), y.end(),
                                     [](double v) { return v <= 0.5; });
    if (!has_pos || !has_neg)
        throw std::invalid_argument("fit_logistic: single-class labels");

    ProbeModel model;
    model.kind = ProbeModel::Kind::Logistic;
    model.weights.assign(X.dim, 0.0);
    model.intercept = 0.0;

    std::vector<double> grad_w(X.dim), trial_w(X.dim);
    double grad_b = 0.0;
    double loss = logistic_loss(X, y, model.weights, model.intercept, l2);
    double step = 1.0;
    constexpr double kArmijo = 1e-4;
    constexpr int kMaxIter = 10000;

    int iter = 0;
    for (; iter < kMaxIter; ++iter) {
        logistic_gradient(X, y, model.weights, model.intercept, l2, grad_w,
                          grad_b);
        double inf_norm = std::abs(grad_b);
        for (const double g : grad_w) inf_norm = std::max(inf_norm, std::abs(g));
        model.grad_inf_norm = inf_norm;
        if (inf_norm < 1e-6) break;

        const double grad_sq =
            kernels::sum_sq(grad_w.data(), grad_w.size()) + grad_b * grad_b;
        step *= 2.0;  // warm-started backtracking
        double trial_b = 0.0;
        double trial_loss = 0.0;
        for (int back = 0; back < 60; ++back) {
            kernels::scale(-step, grad_w.data(), trial_w.data(), X.dim);
            for (std::size_t j = 0; j < X.dim; ++j) trial_w[j] += model.weights[j];
            trial_b = model.intercept - step * grad_b;
            trial_loss = logistic_loss(X, y, trial_w, trial_b, l2);
            if (trial_loss <= loss - kArmijo * step * grad_sq) break;
            step *= 0.5;
        }
        model.weights.swap(trial_w);
        model.intercept = trial_b;
        loss = trial_loss;
    }
    model.iterations = iter;
    return model;
}

namespace {

// Cholesky solve of the symmetric positive-definite system A x = rhs.
// Returns false when a pivot is not positive.
bool cholesky_solve(std::vector<double> A, std::vector<double> rhs,
                    std::size_t d, std::vector<double>& x) {
    for (std::size_t j = 0; j < d; ++j) {
        double diag = A[j * d + j];
        for (std::size_t k = 0; k < j; ++k) diag -= A[j * d + k] * A[j * d + k];
        if (diag <= 0.0 || !std::isfinite(diag)) return false;
        const double root = std::sqrt(diag);
        A[j * d + j] = root;
        for (std::size_t i = j + 1; i < d; ++i) {
            double v = A[i * d + j];
            for (std::size_t k = 0; k < j; ++k) v -= A[i * d + k] * A[j * d + k];
            A[i * d + j] = v / root;
        }
    }
    // Forward then backward substitution.
    for (std::size_t i = 0; i < d; ++i) {
        double v = rhs[i];
        for (std::size_t k = 0; k < i; ++k) v -= A[i * d + k] * rhs[k];
        rhs[i] = v / A[i * d + i];
    }
    x.assign(d, 0.0);
    for (std::size_t ii = d; ii-- > 0;) {
        double v = rhs[ii];
        for (std::size_t k = ii + 1; k < d; ++k) v -= A[k * d + ii] * x[k];
        x[ii] = v / A[ii * d + ii];
    }
    return true;
}

struct CenteredProblem {
    std::vector<double> xtx;     // d x d on centered X
    std::vector<double> xty;     // d on centered X, centered y
    std::vector<double> x_mean;  // column means
    double y_mean = 0.0;
};

CenteredProblem build_centered(const FeatureMatrix& X,
                               const std::vector<double>& y) {
    const std::size_t d = X.dim;
    const std::size_t n = X.rows();
    CenteredProblem p;
    p.x_mean.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        kernels::axpy(1.0, X.row(i).data(), p.x_mean.data(), d);
    for (auto& m : p.x_mean) m /= static_cast<double>(n);
    p.y_mean = kernels::sum(y.data(), n) / static_cast<double>(n);

    p.xtx.assign(d * d, 0.0);
    p.xty.assign(d, 0.0);
    std::vector<double> xc(d);
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = X.row(i);
        for (std::size_t j = 0; j < d; ++j) xc[j] = r[j] - p.x_mean[j];
        const double yc = y[i] - p.y_mean;
        for (std::size_t j = 0; j < d; ++j) {
            kernels::axpy(xc[j], xc.data() + j, p.xtx.data() + j * d + j,
                          d - j);
            p.xty[j] += xc[j] * yc;
        }
    }
    // The loop above fills row j from column j onward; mirror it down.
    for (std::size_t j = 0; j < d; ++j) {
        for (std::size_t i = j + 1; i < d; ++i) p.xtx[i * d + j] = p.xtx[j * d + i];
    }
    return p;
}

bool solve_ridge_lambda(const CenteredProblem& p, std::size_t d, double lambda,
                        std::vector<double>& w) {
    std::vector<double> A = p.xtx;
    for (std::size_t j = 0; j < d; ++j) A[j * d + j] += lambda;
    return cholesky_solve(std::move(A), p.xty, d, w);
}

}  // namespace

ProbeModel fit_ridge(const FeatureMatrix& X, const std::vector<double>& y,
                     const std::vector<double>& lambda_grid,
                     const FeatureMatrix& X_val,
                     const std::vector<double>& y_val,
                     std::vector<std::string>* warnings) {
    if (lambda_grid.empty())
        throw std::invalid_argument("fit_ridge: empty lambda grid");
    for (const double l : lambda_grid) {
        if (l < 0.0) throw std::invalid_argument("fit_ridge: negative lambda");
    }
    if (X.rows() == 0 || y.size() != X.rows())
        throw std::invalid_argument("fit_ridge: bad inputs");

    std::vector<double> grid = lambda_grid;
    std::sort(grid.begin(), grid.end());

    const std::size_t d = X.dim;
    const CenteredProblem p = build_centered(X, y);

    double smallest_positive = 0.0;
    for (const double l : grid) {
        if (l > 0.0) {
            smallest_positive = l;
            break;
        }
    }

    ProbeModel best;
    best.kind = ProbeModel::Kind::Ridge;
    double best_mse = std::numeric_limits<double>::infinity();
    bool found = false;

    for (const double lambda : grid) {
        std::vector<double> w;
        double effective = lambda;
        if (!solve_ridge_lambda(p, d, lambda, w)) {
            if (lambda == 0.0 && smallest_positive > 0.0) {
                if (warnings)
                    warnings->push_back(
                        "ridge: singular system at lambda=0; falling back to "
                        "lambda=" + format_g17(smallest_positive));
                effective = smallest_positive;
                if (!solve_ridge_lambda(p, d, effective, w)) continue;
            } else {
                if (warnings)
                    warnings->push_back("ridge: singular system at lambda=" +
                                        format_g17(lambda) + "; skipped");
                continue;
            }
        }
        ProbeModel model;
        model.kind = ProbeModel::Kind::Ridge;
        model.weights = w;
        model.lambda = effective;
        model.intercept =
            p.y_mean - kernels::dot(w.data(), p.x_mean.data(), d);

        double mse = 0.0;
        if (X_val.rows() > 0) {
            const auto preds = predict(model, X_val);
            mse = kernels::sq_diff_sum(preds.data(), y_val.data(),
                                       preds.size()) /
                  static_cast<double>(preds.size());
        }
        // Ascending grid + strict improvement: ties keep the smaller lambda.
        if (!found || mse < best_mse) {
            best = std::move(model);
            best_mse = mse;
            found = true;
        }
    }
    if (!found) throw std::runtime_error("fit_ridge: no lambda produced a fit");
    return best;
}

std::vector<double> predict(const ProbeModel& model, const FeatureMatrix& X) {
    if (X.dim != model.weights.size())
        throw std::invalid_argument("predict: dimension mismatch");
    std::vector<double> out(X.rows());
    for (std::size_t i = 0; i < X.rows(); ++i) {
        const double margin =
            kernels::dot(model.weights.data(), X.row(i).data(), X.dim) +
            model.intercept;
        out[i] = model.kind == ProbeModel::Kind::Logistic
                     ? 1.0 / (1.0 + std::exp(-margin))
                     : margin;
    }
    return out;
}

double ridge_residual_inf_norm(const FeatureMatrix& X,
                               const std::vector<double>& y,
                               const ProbeModel& model) {
    const std::size_t d = X.dim;
    const CenteredProblem p = build_centered(X, y);
    double inf = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        double v = kernels::dot(p.xtx.data() + j * d, model.weights.data(), d);
        v += model.lambda * model.weights[j];
        v -= p.xty[j];
        inf = std::max(inf, std::abs(v));
    }
    return inf;
}

FeatureMatrix read_features_csv(const std::string& path) {
    const auto lines = read_lines(path);
    if (lines.empty()) throw ParseError("features CSV empty: " + path);
    const auto header = split_csv(lines[0]);
    if (header.empty() || header[0] != "admission_id")
        throw ParseError("features CSV must start with admission_id column");
    FeatureMatrix m;
    m.dim = header.size() - 1;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const auto fields = split_csv(lines[i]);
        if (fields.size() != header.size())
            throw ParseError("features CSV row width mismatch at line " +
                             std::to_string(i + 1));
        m.ids.push_back(fields[0]);
        for (std::size_t j = 1; j < fields.size(); ++j) {
            m.data.push_back(std::stod(fields[j]));
        }
    }
    return m;
}

void write_features_csv(const FeatureMatrix& m, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "admission_id";
    for (std::size_t j = 0; j < m.dim; ++j) out << ",f" << j;
    out << '\n';
    for (std::size_t i = 0; i < m.rows(); ++i) {
        out << m.ids[i];
        const auto r = m.row(i);
        for (std::size_t j = 0; j < m.dim; ++j) out << ',' << format_g17(r[j]);
        out << '\n';
    }
}

namespace {
constexpr char kFeatureMagic[4] = {'E', 'H', 'R', 'F'};
}

void write_features_binary(const FeatureMatrix& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.write(kFeatureMagic, 4);
    const std::uint32_t dim = static_cast<std::uint32_t>(m.dim);
    const std::uint64_t rows = m.rows();
    out.write(reinterpret_cast<const char*>(&dim), sizeof(dim));
    out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
    // Column-major payload.
    for (std::size_t j = 0; j < m.dim; ++j) {
        for (std::size_t i = 0; i < m.rows(); ++i) {
            const double v = m.data[i * m.dim + j];
            out.write(reinterpret_cast<const char*>(&v), sizeof(v));
        }
    }
    for (const auto& id : m.ids) out << id << '\n';
}

FeatureMatrix read_features_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kFeatureMagic, 4) != 0)
        throw ParseError("bad feature file magic: " + path);
    std::uint32_t dim = 0;
    std::uint64_t rows = 0;
    in.read(reinterpret_cast<char*>(&dim), sizeof(dim));
    in.read(reinterpret_cast<char*>(&rows), sizeof(rows));
    if (!in) throw ParseError("truncated feature file: " + path);
    FeatureMatrix m;
    m.dim = dim;
    m.data.assign(rows * dim, 0.0);
    for (std::size_t j = 0; j < dim; ++j) {
        for (std::size_t i = 0; i < rows; ++i) {
            double v = 0.0;
            in.read(reinterpret_cast<char*>(&v), sizeof(v));
            m.data[i * dim + j] = v;
        }
    }
    if (!in) throw ParseError("truncated feature payload: " + path);
    std::string id;
    while (std::getline(in, id) && m.ids.size() < rows) {
        if (!id.empty()) m.ids.push_back(id);
    }
    if (m.ids.size() != rows) throw ParseError("feature id count mismatch");
    return m;
}

FeatureMatrix read_features_auto(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    char magic[4] = {0, 0, 0, 0};
    in.read(magic, 4);
    in.close();
    if (std::memcmp(magic, kFeatureMagic, 4) == 0)
        return read_features_binary(path);
    return read_features_csv(path);
}

}  // namespace ehr
