#include <sys/socket.h>

#include <charconv>
#include <chrono>
#include <cstdlib>
#include <set>

#include <boost/asio.hpp>
#include <boost/beast.hpp>
#include <boost/beast/websocket.hpp>
#include <nlohmann/json.hpp>

#include "kenburns/service.hpp"

namespace kb::service {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using nlohmann::json;

std::uint16_t port_from_env() {
  const char* v = std::getenv("KENBURNS_PORT");
  if (!v || !*v) return kDefaultPort;
  unsigned port = 0;
  const auto [end, ec] = std::from_chars(v, v + std::strlen(v), port);
  if (ec != std::errc() || *end != '\0' || port == 0 || port > 65535) return kDefaultPort;
  return static_cast<std::uint16_t>(port);
}

std::array<std::uint8_t, 8> preview_header(std::uint32_t revision, std::uint32_t frame) {
  std::array<std::uint8_t, 8> h{};
  for (int i = 0; i < 4; ++i) {
    h[i] = static_cast<std::uint8_t>(revision >> (24 - 8 * i));
    h[4 + i] = static_cast<std::uint8_t>(frame >> (24 - 8 * i));
  }
  return h;
}

namespace {

using Request = http::request<http::string_body>;
using Response = http::response<http::string_body>;

constexpr auto kStatusInterval = std::chrono::milliseconds(100);
constexpr double kPreviewFps = 30.0;

struct Part {
  std::string filename;
  std::string data;
};

// Minimal multipart/form-data reader: name -> part.
std::map<std::string, Part> parse_multipart(const std::string& body, const std::string& content_type) {
  const auto bpos = content_type.find("boundary=");
  if (bpos == std::string::npos) throw ParseError("multipart: missing boundary", 0);
  std::string boundary = content_type.substr(bpos + 9);
  if (auto semi = boundary.find(';'); semi != std::string::npos) boundary.resize(semi);
  if (boundary.size() >= 2 && boundary.front() == '"') boundary = boundary.substr(1, boundary.size() - 2);
  const std::string delim = "--" + boundary;

  std::map<std::string, Part> parts;
  std::size_t at = body.find(delim);
  if (at == std::string::npos) throw ParseError("multipart: no boundary in body", 0);
  for (;;) {
    at += delim.size();
    if (body.compare(at, 2, "--") == 0) break;
    if (body.compare(at, 2, "\r\n") != 0) throw ParseError("multipart: malformed delimiter", at);
    at += 2;
    const auto hdr_end = body.find("\r\n\r\n", at);
    if (hdr_end == std::string::npos) throw ParseError("multipart: unterminated part headers", at);
    const std::string headers = body.substr(at, hdr_end - at);
    const auto next = body.find("\r\n" + delim, hdr_end + 4);
    if (next == std::string::npos) throw ParseError("multipart: unterminated part", hdr_end);

    auto attr = [&](const std::string& key) -> std::string {
      const auto p = headers.find(key + "=\"");
      if (p == std::string::npos) return {};
      const auto s = p + key.size() + 2;
      return headers.substr(s, headers.find('"', s) - s);
    };
    const std::string name = attr("name");
    if (!name.empty()) parts[name] = {attr("filename"), body.substr(hdr_end + 4, next - hdr_end - 4)};
    at = next + 2;
  }
  return parts;
}

io::Bytes to_bytes(const std::string& s) { return io::Bytes(s.begin(), s.end()); }

json fields_json(const std::vector<FieldError>& fields) {
  json arr = json::array();
  for (const auto& f : fields) arr.push_back({{"field", f.field}, {"reason", f.reason}});
  return arr;
}

SessionUpload decode_upload(const Request& req) {
  const auto parts = parse_multipart(req.body(), std::string(req[http::field::content_type]));
  auto get = [&](const std::string& k) -> const Part* {
    auto it = parts.find(k);
    return it == parts.end() ? nullptr : &it->second;
  };
  const Part* image = get("image");
  if (!image) throw ValidationError("image", "required");

  SessionUpload up;
  up.image = io::decode_image_png(to_bytes(image->data));
  up.image.validate();
  if (const Part* d = get("depth")) {
    const io::Bytes bytes = to_bytes(d->data);
    if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == 'f' || bytes[1] == 'F')) {
      up.depth = io::decode_depth_pfm(bytes);
    } else {
      const Part* side = get("depth_sidecar");
      if (!side) throw ValidationError("depth_sidecar", "required for PNG depth uploads");
      up.depth = io::depth_from_png16(io::decode_gray16_png(bytes), io::parse_depth_sidecar(side->data));
    }
    up.depth->validate();
    check_paired(*up.depth, up.image.size());
  }
  if (const Part* m = get("masks")) {
    const Part* sal = get("salient");
    up.masks = io::decode_masks(to_bytes(m->data), sal ? sal->data : std::string("{\"salient\":[]}"));
    if (up.masks->size() != up.image.size())
      throw ValidationError("masks", "label map is " + to_string(up.masks->size()) + ", image is " +
                                         to_string(up.image.size()));
  }
  return up;
}

}  // namespace

struct Server::Impl {
  Impl(SessionManager& s, std::uint16_t port, const std::string& address)
      : sessions(s), acceptor(ioc, tcp::endpoint(net::ip::make_address(address), port)) {}

  SessionManager& sessions;
  net::io_context ioc;
  tcp::acceptor acceptor;
  std::thread accept_thread;
  std::atomic<bool> stopping{false};

  std::mutex mu;
  std::condition_variable idle;
  int active = 0;
  std::set<int> open_fds;

  void accept_loop() {
    while (!stopping) {
      tcp::socket sock(ioc);
      beast::error_code ec;
      acceptor.accept(sock, ec);
      if (ec) {
        if (stopping) break;
        continue;
      }
      {
        std::lock_guard lk(mu);
        if (stopping) break;
        ++active;
        open_fds.insert(sock.native_handle());
      }
      auto owned = std::make_unique<tcp::socket>(std::move(sock));
      std::thread([this, s = std::move(owned)]() mutable {
        const int fd = s->native_handle();
        try {
          handle(*s);
        } catch (const std::exception&) {
        }
        {
          std::lock_guard lk(mu);
          open_fds.erase(fd);
        }
        s.reset();  // close before the server may be torn down
        std::lock_guard lk(mu);
        --active;
        idle.notify_all();
      }).detach();
    }
  }

  void shutdown_all() {
    stopping = true;
    ::shutdown(acceptor.native_handle(), SHUT_RDWR);
    {
      std::lock_guard lk(mu);
      for (int fd : open_fds) ::shutdown(fd, SHUT_RDWR);
    }
    if (accept_thread.joinable()) accept_thread.join();
    std::unique_lock lk(mu);
    idle.wait(lk, [&] { return active == 0; });
    beast::error_code ec;
    acceptor.close(ec);
  }

  static void cors(Response& res) {
    res.set(http::field::access_control_allow_origin, "*");
    res.set(http::field::access_control_allow_methods, "GET, POST, PUT, OPTIONS");
    res.set(http::field::access_control_allow_headers, "Content-Type");
    res.set(http::field::access_control_expose_headers, "X-Revision");
  }

  static Response reply(const Request& req, http::status st, std::string body, const std::string& type) {
    Response res{st, req.version()};
    res.set(http::field::server, "kenburns");
    res.set(http::field::content_type, type);
    res.keep_alive(req.keep_alive());
    cors(res);
    res.body() = std::move(body);
    res.prepare_payload();
    return res;
  }

  static Response json_reply(const Request& req, http::status st, const json& j) {
    return reply(req, st, j.dump(), "application/json");
  }

  static Response error(const Request& req, http::status st, const std::string& kind, const std::string& message,
                        const std::vector<FieldError>& fields = {}) {
    json j = {{"v", 1}, {"error", kind}, {"message", message}};
    if (!fields.empty()) j["fields"] = fields_json(fields);
    return json_reply(req, st, j);
  }

  static std::vector<std::string> split_path(std::string_view target, std::string& query) {
    const auto q = target.find('?');
    query = q == std::string_view::npos ? std::string() : std::string(target.substr(q + 1));
    const std::string_view path = target.substr(0, q);
    std::vector<std::string> segs;
    std::size_t i = 0;
    while (i < path.size()) {
      if (path[i] == '/') {
        ++i;
        continue;
      }
      const auto j = path.find('/', i);
      segs.emplace_back(path.substr(i, j == std::string_view::npos ? path.size() - i : j - i));
      if (j == std::string_view::npos) break;
      i = j;
    }
    return segs;
  }

  static std::optional<std::string> query_param(const std::string& query, const std::string& key) {
    std::size_t i = 0;
    while (i <= query.size()) {
      const auto amp = query.find('&', i);
      const std::string kv = query.substr(i, amp == std::string::npos ? std::string::npos : amp - i);
      const auto eq = kv.find('=');
      if (kv.substr(0, eq) == key) return eq == std::string::npos ? std::string() : kv.substr(eq + 1);
      if (amp == std::string::npos) break;
      i = amp + 1;
    }
    return std::nullopt;
  }

  static json status_json(const Session& s) {
    const SessionSnapshot snap = s.snapshot();
    json j = {{"v", 1},
              {"sessionId", s.id()},
              {"status", to_string(snap.status)},
              {"stage", snap.stage},
              {"progress", snap.progress},
              {"revision", snap.revision},
              {"image", {{"w", s.image_size().width}, {"h", s.image_size().height}}}};
    j["error"] = snap.error.empty() ? json(nullptr) : json(snap.error);
    return j;
  }

  Response route(const Request& req) {
    std::string query;
    const auto segs = split_path(std::string_view(req.target().data(), req.target().size()), query);
    const auto method = req.method();
    if (method == http::verb::options) return reply(req, http::status::no_content, "", "text/plain");

    if (segs.size() == 1 && segs[0] == "session") {
      if (method != http::verb::post) return error(req, http::status::method_not_allowed, "method", "use POST");
      auto session = sessions.create(decode_upload(req));
      return json_reply(req, http::status::created, {{"v", 1}, {"sessionId", session->id()}});
    }
    if (segs.size() < 2 || segs[0] != "session") return error(req, http::status::not_found, "not_found", "no such route");

    auto session = sessions.find(segs[1]);
    if (!session) return error(req, http::status::not_found, "unknown_session", "unknown session " + segs[1]);
    const std::string leaf = segs.size() > 2 ? segs[2] : "status";
    if (segs.size() > 3) return error(req, http::status::not_found, "not_found", "no such route");

    if (leaf == "status" && method == http::verb::get) return json_reply(req, http::status::ok, status_json(*session));
    if (leaf == "depth.png" && method == http::verb::get) {
      const io::Bytes png = session->depth_png();
      return reply(req, http::status::ok, std::string(png.begin(), png.end()), "image/png");
    }
    if (leaf == "crops" && method == http::verb::get) {
      const auto [spec, rev] = session->spec();
      Response res = reply(req, http::status::ok, dump_effect_spec(spec), "application/json");
      res.set("X-Revision", std::to_string(rev));
      return res;
    }
    if (leaf == "crops" && method == http::verb::put) {
      const std::uint32_t rev = session->set_spec(parse_effect_spec(req.body(), session->image_size()));
      Response res = reply(req, http::status::no_content, "", "text/plain");
      res.set("X-Revision", std::to_string(rev));
      return res;
    }
    if (leaf == "auto" && method == http::verb::get)
      return reply(req, http::status::ok, dump_effect_spec(session->automatic()), "application/json");
    if (leaf == "export" && method == http::verb::get) {
      int frames = session->spec().first.frames;
      if (auto f = query_param(query, "frames")) {
        const auto [end, ec] = std::from_chars(f->data(), f->data() + f->size(), frames);
        if (ec != std::errc() || end != f->data() + f->size())
          throw ValidationError("frames", "must be an integer");
      }
      const io::Bytes zip = session->export_zip(frames);
      Response res = reply(req, http::status::ok, std::string(zip.begin(), zip.end()), "application/zip");
      res.set(http::field::content_disposition, "attachment; filename=\"kenburns-" + session->id() + ".zip\"");
      return res;
    }
    return error(req, http::status::not_found, "not_found", "no such route");
  }

  Response safe_route(const Request& req) {
    try {
      return route(req);
    } catch (const ParseError& e) {
      return error(req, http::status::bad_request, "parse", e.what());
    } catch (const ValidationError& e) {
      return error(req, http::status::unprocessable_entity, "validation", e.what(), e.fields());
    } catch (const DimensionMismatch& e) {
      return error(req, http::status::unprocessable_entity, "dimension", e.what());
    } catch (const NotReady& e) {
      return error(req, http::status::conflict, "not_ready", e.what());
    } catch (const std::exception& e) {
      return error(req, http::status::internal_server_error, "internal", e.what());
    }
  }

  void handle(tcp::socket& sock) {
    beast::flat_buffer buf;
    for (;;) {
      http::request_parser<http::string_body> parser;
      parser.body_limit(512u * 1024u * 1024u);
      beast::error_code ec;
      http::read(sock, buf, parser, ec);
      if (ec) return;
      Request req = parser.release();

      if (websocket::is_upgrade(req)) {
        std::string query;
        const auto segs = split_path(std::string_view(req.target().data(), req.target().size()), query);
        auto session = segs.size() == 3 && segs[0] == "session" && segs[2] == "preview" ? sessions.find(segs[1]) : nullptr;
        if (!session) {
          Response res = error(req, http::status::not_found, "unknown_session", "no preview stream here");
          http::write(sock, res, ec);
          return;
        }
        stream_preview(sock, req, *session);
        return;
      }

      Response res = safe_route(req);
      http::write(sock, res, ec);
      if (ec || !res.keep_alive()) break;
    }
    beast::error_code ec;
    sock.shutdown(tcp::socket::shutdown_send, ec);
  }

  void stream_preview(tcp::socket& sock, const Request& req, Session& session) {
    websocket::stream<tcp::socket&> ws(sock);
    beast::error_code ec;
    ws.accept(req, ec);
    if (ec) return;

    std::uint32_t revision = 0, k = 0;
    auto next_slot = std::chrono::steady_clock::now();
    const auto period = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
        std::chrono::duration<double>(1.0 / kPreviewFps));
    while (!stopping) {
      // Client messages are only control traffic; reading them answers a close handshake.
      if (sock.available(ec) > 0) {
        beast::flat_buffer in;
        ws.read(in, ec);
        if (ec) return;
      }
      const SessionSnapshot snap = session.snapshot();
      if (snap.status != SessionStatus::ready) {
        json j = {{"v", 1}, {"type", "status"}, {"status", to_string(snap.status)}, {"stage", snap.stage},
                  {"progress", snap.progress}};
        if (!snap.error.empty()) j["error"] = snap.error;
        ws.text(true);
        ws.write(net::buffer(j.dump()), ec);
        if (ec) return;
        if (snap.status == SessionStatus::failed) {
          ws.close(websocket::close_code::internal_error, ec);
          return;
        }
        std::this_thread::sleep_for(kStatusInterval);
        continue;
      }
      if (snap.revision != revision) {
        revision = snap.revision;
        k = 0;
      }
      Session::Frame f = session.preview_frame(k);
      if (f.revision != revision) {
        // A newer spec arrived while rendering; restart that revision from frame 0.
        revision = f.revision;
        k = 0;
        if (f.index != 0) continue;
      }
      std::this_thread::sleep_until(next_slot);
      next_slot = std::max(next_slot + period, std::chrono::steady_clock::now() - period);

      const auto header = preview_header(f.revision, f.index);
      io::Bytes msg(header.begin(), header.end());
      msg.insert(msg.end(), f.data->begin(), f.data->end());
      ws.binary(true);
      ws.write(net::buffer(msg), ec);
      if (ec) return;
      k = (f.index + 1) % f.count;
    }
    ws.close(websocket::close_code::going_away, ec);
  }
};

Server::Server(SessionManager& sessions, std::uint16_t port, const std::string& address)
    : impl_(std::make_unique<Impl>(sessions, port, address)) {
  port_ = impl_->acceptor.local_endpoint().port();
}

Server::~Server() { stop(); }

void Server::start() {
  if (impl_->accept_thread.joinable()) return;
  impl_->accept_thread = std::thread([this] { impl_->accept_loop(); });
}

void Server::stop() {
  if (!impl_ || impl_->stopping.exchange(true)) return;
  impl_->shutdown_all();
}

}  // namespace kb::service
