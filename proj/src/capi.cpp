#include "hjhom.h"

#include <memory>
#include <string>

#include "hjhom/runner.hpp"

using namespace hjhom;

struct hjh_session {
  ConfigDocument config;
  std::string out_dir{"hjh-out"};
  int jobs{0};
  std::string summary;
};

namespace {

thread_local std::string t_last_error;

hjh_status status_for(int exit_code) {
  switch (exit_code) {
    case 0: return HJH_OK;
    case 1: return HJH_ERR_PARSE;
    case 2: return HJH_ERR_VALIDATION;
    case 4: return HJH_ERR_PROPERTY;
    default: return HJH_ERR_SOLVER;
  }
}

template <class Fn>
hjh_status guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    t_last_error = e.what();
    return status_for(exit_code_for(e.code()));
  } catch (const std::exception& e) {
    t_last_error = e.what();
    return HJH_ERR_SOLVER;
  }
}

}  // namespace

extern "C" {

hjh_status hjh_session_open(const char* config_path, hjh_session** out) {
  if (!config_path || !out) {
    t_last_error = "null argument";
    return HJH_ERR_USAGE;
  }
  return guarded([&] {
    auto s = std::make_unique<hjh_session>();
    s->config = ConfigDocument::parse_file(config_path);
    *out = s.release();
    return HJH_OK;
  });
}

hjh_status hjh_session_open_text(const char* config_json, hjh_session** out) {
  if (!config_json || !out) {
    t_last_error = "null argument";
    return HJH_ERR_USAGE;
  }
  return guarded([&] {
    auto s = std::make_unique<hjh_session>();
    s->config = ConfigDocument::parse_text(config_json);
    *out = s.release();
    return HJH_OK;
  });
}

void hjh_session_close(hjh_session* s) { delete s; }

hjh_status hjh_session_set_out_dir(hjh_session* s, const char* dir) {
  if (!s || !dir) {
    t_last_error = "null argument";
    return HJH_ERR_USAGE;
  }
  s->out_dir = dir;
  return HJH_OK;
}

hjh_status hjh_session_set_jobs(hjh_session* s, int jobs) {
  if (!s) {
    t_last_error = "null session";
    return HJH_ERR_USAGE;
  }
  s->jobs = jobs;
  return HJH_OK;
}

hjh_status hjh_session_override(hjh_session* s, const char* key, double value) {
  if (!s || !key) {
    t_last_error = "null argument";
    return HJH_ERR_USAGE;
  }
  return guarded([&] {
    s->config.apply_override(key, value);
    return HJH_OK;
  });
}

hjh_status hjh_run(hjh_session* s, const char* command) {
  if (!s || !command) {
    t_last_error = "null argument";
    return HJH_ERR_USAGE;
  }
  return guarded([&] {
    const CommandResult r = run_command(command, s->config, s->out_dir, s->jobs);
    s->summary = r.summary;
    if (r.exit_code != 0) t_last_error = r.detail.empty() ? r.summary : r.detail;
    return status_for(r.exit_code);
  });
}

const char* hjh_last_summary(const hjh_session* s) {
  return s ? s->summary.c_str() : "";
}

const char* hjh_last_error(void) { return t_last_error.c_str(); }

const char* hjh_version(void) { return kVersion; }

}  // extern "C"
