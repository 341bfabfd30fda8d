#pragma once

#include "cldiv/normal4.hpp"

#include <functional>
#include <map>
#include <memory>

namespace cldiv {

struct ModelOptions {
  Normal4Variability variability = Normal4Variability::Exact;
};

using ModelFactory = std::function<std::unique_ptr<CompositeModel>(const ModelOptions&)>;

inline std::map<std::string, ModelFactory>& model_registry() {
  static std::map<std::string, ModelFactory> reg{
      {"normal4", [](const ModelOptions& o) { return std::make_unique<Normal4Model>(o.variability); }},
  };
  return reg;
}

inline void register_model(const std::string& name, ModelFactory f) { model_registry()[name] = std::move(f); }

inline std::unique_ptr<CompositeModel> make_model(const std::string& name, const ModelOptions& o = {}) {
  auto& reg = model_registry();
  auto it = reg.find(name);
  if (it == reg.end()) throw Error(ErrorCode::Usage, "unknown model '" + name + "'");
  return it->second(o);
}

}  // namespace cldiv
