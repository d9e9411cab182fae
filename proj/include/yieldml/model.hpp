#pragma once

#include <span>
#include <string>
#include <variant>

#include "yieldml/grnn.hpp"
#include "yieldml/mlfn.hpp"
#include "yieldml/svr.hpp"

namespace yieldml {

using Model = std::variant<GrnnModel, MlfnModel, SvrModel>;

inline double predict(const Model& m, std::span<const double> x) {
    return std::visit(
        [&](const auto& model) -> double {
            using T = std::decay_t<decltype(model)>;
            if constexpr (std::is_same_v<T, GrnnModel>) return grnn_predict(model, x);
            if constexpr (std::is_same_v<T, MlfnModel>) return mlfn_predict(model, x);
            if constexpr (std::is_same_v<T, SvrModel>) return svr_predict(model, x);
        },
        m);
}

inline std::string model_kind(const Model& m) {
    return std::visit(
        [](const auto& model) -> std::string {
            using T = std::decay_t<decltype(model)>;
            if constexpr (std::is_same_v<T, GrnnModel>) return "grnn";
            if constexpr (std::is_same_v<T, MlfnModel>) return "mlfn";
            if constexpr (std::is_same_v<T, SvrModel>) return "svr";
        },
        m);
}

inline size_t model_input_dim(const Model& m) {
    return std::visit([](const auto& model) { return model.normalizer.dim(); }, m);
}

}  // namespace yieldml
