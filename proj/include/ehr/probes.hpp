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
#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace ehr {

// Row-major feature matrix keyed by admission id.
struct FeatureMatrix {
    std::vector<std::string> ids;
    std::size_t dim = 0;
    std::vector<double> data;  // ids.size() x dim

    std::size_t rows() const { return ids.size(); }
    std::span<const double> row(std::size_t i) const {
        return {data.data() + i * dim, dim};
    }
    std::span<double> row(std::size_t i) {
        return {data.data() + i * dim, dim};
    }
};

struct ZScoreStats {
    std::vector<double> mean;
    std::vector<double> sd;  // population SD over the train split
};

// Standardizes every matrix with train-split statistics; constant train
// columns map to zero.
ZScoreStats zscore_fit(const FeatureMatrix& train);
void zscore_apply(const ZScoreStats& stats, FeatureMatrix& m);

struct ProbeModel {
    enum class Kind { Logistic, Ridge };
    Kind kind = Kind::Logistic;
    std::vector<double> weights;
    double intercept = 0.0;
    double lambda = 0.0;  // ridge only
    int iterations = 0;   // logistic only
    double grad_inf_norm = 0.0;
};

// Unregularized mean log-loss minimized by deterministic full-batch
// gradient descent with a backtracking step; stops at gradient inf-norm
// < 1e-6 or 10,000 iterations. Throws when y has a single class. An
// optional tiny L2 (default off) guards separable toy data.
ProbeModel fit_logistic(const FeatureMatrix& X, const std::vector<double>& y,
                        double l2 = 0.0);

// Mean log-loss and its gradient; exposed for gradient verification.
double logistic_loss(const FeatureMatrix& X, const std::vector<double>& y,
                     const std::vector<double>& w, double b, double l2);
void logistic_gradient(const FeatureMatrix& X, const std::vector<double>& y,
                       const std::vector<double>& w, double b, double l2,
                       std::vector<double>& grad_w, double& grad_b);

// Closed-form normal-equations ridge per lambda (intercept unpenalized via
// centering); the lambda minimizing validation MSE wins, ties to the
// smaller lambda. A singular lambda=0 system falls back to the smallest
// positive grid point with a warning.
ProbeModel fit_ridge(const FeatureMatrix& X, const std::vector<double>& y,
                     const std::vector<double>& lambda_grid,
                     const FeatureMatrix& X_val, const std::vector<double>& y_val,
                     std::vector<std::string>* warnings = nullptr);

// Logistic models yield probabilities in (0,1); ridge models real scores.
std::vector<double> predict(const ProbeModel& model, const FeatureMatrix& X);

// Infinity-norm residual of the centered normal equations
// (Xc'Xc + lambda I) w - Xc'yc; small for any correctly solved fit.
double ridge_residual_inf_norm(const FeatureMatrix& X,
                               const std::vector<double>& y,
                               const ProbeModel& model);

// CSV format: admission_id,f0..f{d-1}. The binary format is a little-endian
// "EHRF" header (u32 magic, u32 dim, u64 rows), rows*dim f64 values
// column-major, then newline-separated admission ids.
FeatureMatrix read_features_csv(const std::string& path);
void write_features_csv(const FeatureMatrix& m, const std::string& path);
FeatureMatrix read_features_binary(const std::string& path);
void write_features_binary(const FeatureMatrix& m, const std::string& path);
FeatureMatrix read_features_auto(const std::string& path);

}  // namespace ehr
