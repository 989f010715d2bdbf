#include <algorithm>
#include <fstream>
#include <functional>
#include <sstream>

#include "rrcal/error.hpp"
#include "rrcal/pipeline_io.hpp"
#include "text_format.hpp"

namespace rrcal {
namespace {

using detail::format_double;

struct Field {
  const char* key;
  std::function<std::string(const PipelineConfig&)> get;
  std::function<bool(PipelineConfig&, std::string_view)> set;
};

Field real(const char* key, double PipelineConfig::*member) {
  return {key, [member](const PipelineConfig& c) { return format_double(c.*member); },
          [member](PipelineConfig& c, std::string_view v) {
            return detail::parse_double(v, c.*member);
          }};
}

template <typename Getter>
Field real_at(const char* key, Getter ref) {
  return {key, [ref](const PipelineConfig& c) { return format_double(ref(c)); },
          [ref](PipelineConfig& c, std::string_view v) { return detail::parse_double(v, ref(c)); }};
}

template <typename Getter>
Field count_at(const char* key, Getter ref) {
  return {key, [ref](const PipelineConfig& c) { return std::to_string(ref(c)); },
          [ref](PipelineConfig& c, std::string_view v) { return detail::parse_integer(v, ref(c)); }};
}

template <typename Getter>
Field flag_at(const char* key, Getter ref) {
  return {key,
          [ref](const PipelineConfig& c) {
            return std::string(ref(c) ? "true" : "false");
          },
          [ref](PipelineConfig& c, std::string_view v) {
            if (v == "true" || v == "1") {
              ref(c) = true;
            } else if (v == "false" || v == "0") {
              ref(c) = false;
            } else {
              return false;
            }
            return true;
          }};
}

template <typename Getter>
Field list_at(const char* key, Getter ref) {
  return {key,
          [ref](const PipelineConfig& c) {
            std::string out;
            for (double x : ref(c)) {
              if (!out.empty()) out += ',';
              out += format_double(x);
            }
            return out;
          },
          [ref](PipelineConfig& c, std::string_view v) {
            std::vector<double> values;
            for (std::string_view item : detail::split(v, ',')) {
              double x = 0.0;
              if (!detail::parse_double(item, x)) return false;
              values.push_back(x);
            }
            ref(c) = std::move(values);
            return true;
          }};
}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      real_at("ransac.inlier_fraction", [](auto& c) -> auto& { return c.ransac.inlier_fraction_threshold; }),
      real_at("ransac.residual_threshold", [](auto& c) -> auto& { return c.ransac.residual_threshold; }),
      count_at("ransac.max_iterations", [](auto& c) -> auto& { return c.ransac.max_iterations; }),
      count_at("ransac.seed", [](auto& c) -> auto& { return c.ransac.rng_seed; }),
      real("min_speed", &PipelineConfig::min_speed),
      real("sync_max_gap", &PipelineConfig::sync_max_gap),
      count_at("solver.max_iterations", [](auto& c) -> auto& { return c.solver.max_iterations; }),
      real_at("solver.initial_lambda", [](auto& c) -> auto& { return c.solver.initial_lambda; }),
      real_at("solver.gradient_tolerance", [](auto& c) -> auto& { return c.solver.gradient_tolerance; }),
      real_at("solver.relative_cost_tolerance", [](auto& c) -> auto& { return c.solver.relative_cost_tolerance; }),
      real_at("solver.step_tolerance", [](auto& c) -> auto& { return c.solver.step_tolerance; }),
      count_at("solver.rotation_pairs", [](auto& c) -> auto& { return c.solver.rotation_pairs; }),
      real_at("solver.init_min_speed", [](auto& c) -> auto& { return c.solver.init_min_speed; }),
      real_at("solver.init_min_lever", [](auto& c) -> auto& { return c.solver.init_min_lever; }),
      flag_at("solver.check_excitation", [](auto& c) -> auto& { return c.solver.check_excitation; }),
      real_at("solver.max_degenerate_fraction", [](auto& c) -> auto& { return c.solver.max_degenerate_fraction; }),
      real_at("solver.min_information_ratio", [](auto& c) -> auto& { return c.solver.min_information_ratio; }),
      real_at("excitation.relative_det", [](auto& c) -> auto& { return c.solver.excitation.relative_det; }),
      real_at("excitation.alpha_floor", [](auto& c) -> auto& { return c.solver.excitation.alpha_floor; }),
      real_at("excitation.min_speed", [](auto& c) -> auto& { return c.solver.excitation.min_speed; }),
      real_at("excitation.axis_sine", [](auto& c) -> auto& { return c.solver.excitation.axis_sine; }),
      real_at("excitation.flag_fraction", [](auto& c) -> auto& { return c.solver.excitation.flag_fraction; }),
      count_at("experiment.trials", [](auto& c) -> auto& { return c.experiment.trials; }),
      list_at("experiment.sigmas", [](auto& c) -> auto& { return c.experiment.sigmas; }),
      list_at("experiment.durations", [](auto& c) -> auto& { return c.experiment.durations; }),
      real_at("experiment.rate", [](auto& c) -> auto& { return c.experiment.rate; }),
      count_at("experiment.seed", [](auto& c) -> auto& { return c.experiment.seed; }),
  };
  return table;
}

}  // namespace

void PipelineConfig::validate() const {
  ransac.validate();
  if (!(min_speed >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "config: min_speed must be >= 0");
  if (!(sync_max_gap > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "config: sync_max_gap must be positive");
  }
  if (solver.max_iterations == 0) {
    throw Error(ErrorCode::kInvalidArgument, "config: solver.max_iterations must be positive");
  }
  if (!(experiment.rate > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "config: experiment.rate must be positive");
  }
}

PipelineConfig parse_config(std::istream& in) {
  PipelineConfig cfg;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view text = line;
    if (const auto hash = text.find('#'); hash != std::string_view::npos) {
      text = text.substr(0, hash);
    }
    text = detail::trim(text);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) throw ParseError(line_no, "expected 'key = value'");
    const std::string_view key = detail::trim(text.substr(0, eq));
    const std::string_view value = detail::trim(text.substr(eq + 1));
    const auto& table = fields();
    const auto it = std::find_if(table.begin(), table.end(),
                                 [&](const Field& f) { return key == f.key; });
    if (it == table.end()) throw ParseError(line_no, "unknown key '" + std::string(key) + "'");
    if (!it->set(cfg, value)) {
      throw ParseError(line_no, "invalid value '" + std::string(value) + "' for " + it->key);
    }
  }
  cfg.validate();
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open config " + path.string());
  return parse_config(in);
}

std::vector<std::pair<std::string, std::string>> config_entries(const PipelineConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const Field& f : fields()) out.emplace_back(f.key, f.get(cfg));
  return out;
}

std::string format_config(const PipelineConfig& cfg) {
  std::ostringstream out;
  for (const auto& [key, value] : config_entries(cfg)) out << key << " = " << value << '\n';
  return out.str();
}

}  // namespace rrcal
