// Chat-completion HTTP client.

#include <cstdlib>
#include <fstream>
#include <set>

#include <httplib.h>

#include "deskagent/llm_gateway.hpp"

namespace deskagent::llm {

using nlohmann::json;

namespace {

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string base;    // path prefix without trailing slash
};

Endpoint split_endpoint(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint must include a scheme: " + url);
  std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http") throw ConfigError("only http:// endpoints are supported: " + url);
  auto path_start = url.find('/', scheme_end + 3);
  Endpoint e;
  e.origin = url.substr(0, path_start);
  e.base = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!e.base.empty() && e.base.back() == '/') e.base.pop_back();
  return e;
}

void put_u16(std::string& out, unsigned v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, unsigned v) {
  put_u16(out, v & 0xffff);
  put_u16(out, v >> 16);
}

}  // namespace

HttpConfig load_http_config(const std::optional<std::filesystem::path>& file) {
  HttpConfig c;
  if (file) {
    std::ifstream in(*file);
    if (!in) throw ConfigError("cannot open gateway config " + file->string());
    try {
      json j = json::parse(in);
      c.endpoint = j.value("endpoint", c.endpoint);
      c.model = j.value("model", c.model);
      c.api_key = j.value("api_key", c.api_key);
      c.max_tokens = j.value("max_tokens", c.max_tokens);
      c.temperature = j.value("temperature", c.temperature);
      c.timeout = std::chrono::milliseconds(j.value("timeout_ms", static_cast<long>(c.timeout.count())));
    } catch (const json::exception& e) {
      throw ConfigError(file->string() + ": " + e.what());
    }
  }
  c.endpoint = env_or("GATEWAY_ENDPOINT", c.endpoint);
  c.model = env_or("GATEWAY_MODEL", c.model);
  c.api_key = env_or("GATEWAY_KEY", c.api_key);
  if (c.endpoint.empty()) throw ConfigError("gateway endpoint is not configured");
  if (c.model.empty()) throw ConfigError("gateway model is not configured");
  return c;
}

std::string base64_encode(std::string_view bytes) {
  static constexpr char kAlphabet[] =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    unsigned v = (static_cast<unsigned char>(bytes[i]) << 16) |
                 (static_cast<unsigned char>(bytes[i + 1]) << 8) |
                 static_cast<unsigned char>(bytes[i + 2]);
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += kAlphabet[(v >> 6) & 63];
    out += kAlphabet[v & 63];
  }
  std::size_t rest = bytes.size() - i;
  if (rest > 0) {
    unsigned v = static_cast<unsigned char>(bytes[i]) << 16;
    if (rest == 2) v |= static_cast<unsigned char>(bytes[i + 1]) << 8;
    out += kAlphabet[(v >> 18) & 63];
    out += kAlphabet[(v >> 12) & 63];
    out += rest == 2 ? kAlphabet[(v >> 6) & 63] : '=';
    out += '=';
  }
  return out;
}

std::string rasterize_placeholder(const env::RenderArtifact& a) {
  constexpr int kScale = 16;
  const int w = std::max(1, (a.w + kScale - 1) / kScale);
  const int h = std::max(1, (a.h + kScale - 1) / kScale);
  const int stride = (w * 3 + 3) / 4 * 4;
  std::vector<unsigned char> pixels(static_cast<std::size_t>(stride) * h, 0xff);
  for (const auto& e : a.elements) {
    unsigned char shade = static_cast<unsigned char>(0xe0 - 0x14 * static_cast<int>(e.role));
    if (e.selected) shade = static_cast<unsigned char>(shade / 2);
    int x0 = e.bbox.x / kScale, y0 = e.bbox.y / kScale;
    int x1 = std::min(w, (e.bbox.x + e.bbox.w + kScale - 1) / kScale);
    int y1 = std::min(h, (e.bbox.y + e.bbox.h + kScale - 1) / kScale);
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x) {
        // BMP rows run bottom-up.
        std::size_t off = static_cast<std::size_t>(h - 1 - y) * stride + x * 3;
        pixels[off] = pixels[off + 1] = pixels[off + 2] = shade;
      }
  }
  std::string out;
  const unsigned data_size = static_cast<unsigned>(pixels.size());
  out += "BM";
  put_u32(out, 54 + data_size);
  put_u32(out, 0);
  put_u32(out, 54);
  put_u32(out, 40);
  put_u32(out, static_cast<unsigned>(w));
  put_u32(out, static_cast<unsigned>(h));
  put_u16(out, 1);
  put_u16(out, 24);
  put_u32(out, 0);
  put_u32(out, data_size);
  put_u32(out, 2835);
  put_u32(out, 2835);
  put_u32(out, 0);
  put_u32(out, 0);
  out.append(reinterpret_cast<const char*>(pixels.data()), pixels.size());
  return out;
}

json build_chat_body(const ChatRequest& request, const HttpConfig& config) {
  json messages = json::array();
  for (const auto& m : request.messages) {
    json content = json::array();
    for (const auto& p : m.parts) {
      if (auto* t = std::get_if<TextPart>(&p)) {
        content.push_back({{"type", "text"}, {"text", t->text}});
      } else {
        const auto& artifact = std::get<ImagePart>(p).artifact;
        std::string url = "data:image/bmp;base64," + base64_encode(rasterize_placeholder(artifact));
        content.push_back({{"type", "image_url"}, {"image_url", {{"url", url}}}});
      }
    }
    messages.push_back({{"role", m.speaker == Speaker::System ? "system" : "user"},
                        {"content", std::move(content)}});
  }
  return {{"model", config.model},
          {"messages", std::move(messages)},
          {"max_tokens", request.max_tokens},
          {"temperature", request.temperature}};
}

std::vector<std::string> validate_chat_body(const json& body) {
  std::vector<std::string> problems;
  auto bad = [&](std::string p) { problems.push_back(std::move(p)); };
  if (!body.is_object()) {
    bad("body is not an object");
    return problems;
  }
  for (const auto& item : body.items()) {
    static const std::set<std::string> allowed = {"model", "messages", "max_tokens", "temperature"};
    if (!allowed.count(item.key())) bad("unexpected key " + item.key());
  }
  if (!body.contains("model") || !body["model"].is_string() || body["model"].get<std::string>().empty())
    bad("model must be a non-empty string");
  if (!body.contains("max_tokens") || !body["max_tokens"].is_number_integer() ||
      body["max_tokens"].get<long>() <= 0)
    bad("max_tokens must be a positive integer");
  if (!body.contains("temperature") || !body["temperature"].is_number())
    bad("temperature must be a number");
  if (!body.contains("messages") || !body["messages"].is_array() || body["messages"].empty()) {
    bad("messages must be a non-empty array");
    return problems;
  }
  bool has_user = false;
  for (std::size_t i = 0; i < body["messages"].size(); ++i) {
    const json& m = body["messages"][i];
    std::string where = "messages[" + std::to_string(i) + "]";
    if (!m.is_object() || !m.contains("role") || !m["role"].is_string()) {
      bad(where + " needs a string role");
      continue;
    }
    std::string role = m["role"].get<std::string>();
    if (role == "user") has_user = true;
    else if (role != "system") bad(where + " role must be system or user");
    if (!m.contains("content") || !m["content"].is_array() || m["content"].empty()) {
      bad(where + " content must be a non-empty array");
      continue;
    }
    for (std::size_t k = 0; k < m["content"].size(); ++k) {
      const json& part = m["content"][k];
      std::string pw = where + ".content[" + std::to_string(k) + "]";
      std::string type = part.is_object() && part.contains("type") && part["type"].is_string()
                             ? part["type"].get<std::string>()
                             : "";
      if (type == "text") {
        if (!part.contains("text") || !part["text"].is_string()) bad(pw + " text must be a string");
      } else if (type == "image_url") {
        if (role != "user") bad(pw + " images are only allowed in user messages");
        if (!part.contains("image_url") || !part["image_url"].is_object() ||
            !part["image_url"].contains("url") || !part["image_url"]["url"].is_string() ||
            part["image_url"]["url"].get<std::string>().rfind("data:image/", 0) != 0)
          bad(pw + " image_url.url must be a data:image/ URL");
      } else {
        bad(pw + " has unknown type '" + type + "'");
      }
    }
  }
  if (!has_user) bad("at least one user message is required");
  return problems;
}

HttpBackend::HttpBackend(HttpConfig config) : config_(std::move(config)) {}

std::string HttpBackend::complete(const ChatRequest& request) {
  Endpoint ep = split_endpoint(config_.endpoint);
  ChatRequest req = request;
  req.max_tokens = config_.max_tokens;
  req.temperature = config_.temperature;
  const std::string body = build_chat_body(req, config_).dump();

  httplib::Client client(ep.origin);
  auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
  auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  httplib::Headers headers;
  if (!config_.api_key.empty()) headers.emplace("Authorization", "Bearer " + config_.api_key);

  auto res = client.Post(ep.base + "/chat/completions", headers, body, "application/json");
  if (!res) {
    auto err = res.error();
    if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read)
      throw Timeout("request to " + config_.endpoint + " failed: " + httplib::to_string(err));
    throw HttpError(0, httplib::to_string(err));
  }
  if (res->status != 200) throw HttpError(res->status, res->body.substr(0, 200));
  try {
    json j = json::parse(res->body);
    const json& content = j.at("choices").at(0).at("message").at("content");
    if (content.is_string()) return content.get<std::string>();
    std::string text;
    for (const auto& part : content)
      if (part.value("type", "") == "text") text += part.value("text", "");
    return text;
  } catch (const json::exception& e) {
    throw HttpError(res->status, std::string("malformed response: ") + e.what());
  }
}

HttpProvider::HttpProvider(HttpConfig config) : config_(std::move(config)) {}

std::unique_ptr<Backend> HttpProvider::open_episode(const std::string&) const {
  return std::make_unique<HttpBackend>(config_);
}

std::string HttpProvider::describe() const { return "http:" + config_.endpoint; }

}  // namespace deskagent::llm
