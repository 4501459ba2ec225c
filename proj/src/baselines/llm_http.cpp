#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cstdlib>

#include "moral/baselines/llm.hpp"

namespace moral::baselines {

Transport http_transport(const LlmClientOptions& options) {
  const char* key = std::getenv(options.api_key_env.c_str());
  if (key == nullptr || *key == '\0') {
    throw LlmError("llm: environment variable " + options.api_key_env + " is not set", false);
  }
  return [options, auth = std::string("Bearer ") + key](const std::string& body) {
    httplib::Client client(options.base_url);
    client.set_connection_timeout(options.timeout_seconds, 0);
    client.set_read_timeout(options.timeout_seconds, 0);
    httplib::Headers headers = {{"Authorization", auth}};
    auto res = client.Post(options.path, headers, body, "application/json");
    HttpResult r;
    if (!res) {
      r.error = httplib::to_string(res.error());
      return r;
    }
    r.status = res->status;
    r.body = res->body;
    return r;
  };
}

}  // namespace moral::baselines
