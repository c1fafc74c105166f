#include "segreward/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "segreward/errors.hpp"

namespace segreward {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "on" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "off" || value == "no") return false;
  throw InvalidConfigError("config key '" + key + "': expected a boolean, got '" + value + "'");
}

long long parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    long long v = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw InvalidConfigError("config key '" + key + "': expected an integer, got '" + value +
                             "'");
  }
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw InvalidConfigError("config key '" + key + "': expected a number, got '" + value + "'");
  }
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

void apply_override(TrainConfig& c, const std::string& key, const std::string& value) {
  if (key == "seed") {
    c.seed = static_cast<std::uint64_t>(parse_int(key, value));
  } else if (key == "steps") {
    c.steps = static_cast<int>(parse_int(key, value));
  } else if (key == "group_size") {
    c.grpo.group_size = static_cast<int>(parse_int(key, value));
  } else if (key == "batch_size") {
    c.grpo.batch_size = static_cast<int>(parse_int(key, value));
  } else if (key == "learning_rate") {
    c.grpo.learning_rate = parse_double(key, value);
  } else if (key == "normalize_by_std") {
    c.grpo.normalize_by_std = parse_bool(key, value);
  } else if (key == "epsilon") {
    c.grpo.epsilon = parse_double(key, value);
  } else if (key == "kl_beta") {
    c.grpo.kl_beta = parse_double(key, value);
  } else if (key == "anchor_n0") {
    c.reward.length.anchor_n0 = static_cast<int>(parse_int(key, value));
  } else if (key == "gamma") {
    c.reward.length.gamma = parse_double(key, value);
  } else if (key == "iou_threshold") {
    c.reward.iou_threshold = parse_double(key, value);
  } else if (key == "box_l1_threshold") {
    c.reward.box_l1_threshold = parse_double(key, value);
  } else if (key == "point_l1_threshold") {
    c.reward.point_l1_threshold = parse_double(key, value);
  } else if (key == "box_l1_mode") {
    if (value == "sum") {
      c.reward.box_l1_mode = BoxL1Mode::kSum;
    } else if (value == "mean") {
      c.reward.box_l1_mode = BoxL1Mode::kMean;
    } else {
      throw InvalidConfigError("config key 'box_l1_mode': expected sum or mean");
    }
  } else if (key == "reward_mode") {
    if (value == "box_point") {
      c.reward.mode = RewardMode::kBoxPoint;
    } else if (value == "mask") {
      c.reward.mode = RewardMode::kMask;
    } else {
      throw InvalidConfigError("config key 'reward_mode': expected box_point or mask");
    }
  } else if (key == "enable_desc") {
    c.reward.enable_desc = parse_bool(key, value);
  } else if (key == "enable_len") {
    c.reward.enable_len = parse_bool(key, value);
  } else if (key == "scene_pool") {
    c.scene_pool = static_cast<int>(parse_int(key, value));
  } else if (key == "hard_fraction") {
    c.hard_fraction = parse_double(key, value);
  } else if (key == "oracle_noise") {
    c.oracle_noise = parse_double(key, value);
  } else if (key == "candidate_mode") {
    if (value == "full") {
      c.candidate_mode = CandidateMode::kFull;
    } else if (value == "negative_only") {
      c.candidate_mode = CandidateMode::kNegativeOnly;
    } else {
      throw InvalidConfigError("config key 'candidate_mode': expected full or negative_only");
    }
  } else if (key == "image_w") {
    c.scene.image_w = static_cast<int>(parse_int(key, value));
  } else if (key == "image_h") {
    c.scene.image_h = static_cast<int>(parse_int(key, value));
  } else if (key == "grid_w") {
    c.scene.grid_w = static_cast<int>(parse_int(key, value));
  } else if (key == "grid_h") {
    c.scene.grid_h = static_cast<int>(parse_int(key, value));
  } else if (key == "min_objects") {
    c.scene.min_objects = static_cast<int>(parse_int(key, value));
  } else if (key == "max_objects") {
    c.scene.max_objects = static_cast<int>(parse_int(key, value));
  } else if (key == "tag_probability") {
    c.scene.tag_probability = parse_double(key, value);
  } else if (key == "force_class_pair") {
    c.scene.force_class_pair = parse_bool(key, value);
  } else {
    throw InvalidConfigError("unknown config key '" + key + "'");
  }
}

TrainConfig parse_train_config(const std::string& text) {
  TrainConfig config;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    std::size_t eq = stripped.find('=');
    if (eq == std::string::npos)
      throw InvalidConfigError("config line " + std::to_string(line_no) +
                               ": expected key=value, got '" + stripped + "'");
    apply_override(config, trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
  }
  return config;
}

TrainConfig load_train_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidConfigError("cannot open config file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_train_config(buffer.str());
}

std::map<std::string, std::string> config_to_map(const TrainConfig& c) {
  std::map<std::string, std::string> m;
  m["seed"] = std::to_string(c.seed);
  m["steps"] = std::to_string(c.steps);
  m["group_size"] = std::to_string(c.grpo.group_size);
  m["batch_size"] = std::to_string(c.grpo.batch_size);
  m["learning_rate"] = format_double(c.grpo.learning_rate);
  m["normalize_by_std"] = c.grpo.normalize_by_std ? "true" : "false";
  m["epsilon"] = format_double(c.grpo.epsilon);
  m["kl_beta"] = format_double(c.grpo.kl_beta);
  m["anchor_n0"] = std::to_string(c.reward.length.anchor_n0);
  m["gamma"] = format_double(c.reward.length.gamma);
  m["iou_threshold"] = format_double(c.reward.iou_threshold);
  m["box_l1_threshold"] = format_double(c.reward.box_l1_threshold);
  m["point_l1_threshold"] = format_double(c.reward.point_l1_threshold);
  m["box_l1_mode"] = c.reward.box_l1_mode == BoxL1Mode::kSum ? "sum" : "mean";
  m["reward_mode"] = c.reward.mode == RewardMode::kBoxPoint ? "box_point" : "mask";
  m["enable_desc"] = c.reward.enable_desc ? "true" : "false";
  m["enable_len"] = c.reward.enable_len ? "true" : "false";
  m["scene_pool"] = std::to_string(c.scene_pool);
  m["hard_fraction"] = format_double(c.hard_fraction);
  m["oracle_noise"] = format_double(c.oracle_noise);
  m["candidate_mode"] =
      c.candidate_mode == CandidateMode::kFull ? "full" : "negative_only";
  m["image_w"] = std::to_string(c.scene.image_w);
  m["image_h"] = std::to_string(c.scene.image_h);
  m["grid_w"] = std::to_string(c.scene.grid_w);
  m["grid_h"] = std::to_string(c.scene.grid_h);
  m["min_objects"] = std::to_string(c.scene.min_objects);
  m["max_objects"] = std::to_string(c.scene.max_objects);
  m["tag_probability"] = format_double(c.scene.tag_probability);
  m["force_class_pair"] = c.scene.force_class_pair ? "true" : "false";
  return m;
}

std::string config_to_text(const TrainConfig& config) {
  std::string out;
  for (const auto& [key, value] : config_to_map(config)) out += key + "=" + value + "\n";
  return out;
}

}  // namespace segreward
