#include "apollo/forecast/subprocess.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cstring>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>

#include "apollo/error.hpp"

namespace apollo::forecast {
namespace {

template <typename T>
T parse_number(std::string_view text, const char* what) {
  T value{};
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw InputError(std::string("malformed ") + what + " '" + std::string(text) + "'");
  }
  return value;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    parts.push_back(s.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

void write_all(int fd, std::string_view data) {
  while (!data.empty()) {
    const ssize_t n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      throw RuntimeError(std::string("writing to predictor process: ") + std::strerror(errno));
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

class SubprocessGenerator final : public FrameGenerator {
 public:
  SubprocessGenerator(const std::string& command, const ForecastRequest& req)
      : num_samples_(req.num_samples), quant_factor_(req.context.config.quant_factor) {
    static std::once_flag ignore_sigpipe;
    std::call_once(ignore_sigpipe, [] { ::signal(SIGPIPE, SIG_IGN); });

    int to_child[2];
    int from_child[2];
    if (::pipe2(to_child, O_CLOEXEC) != 0) throw RuntimeError("pipe() failed");
    if (::pipe2(from_child, O_CLOEXEC) != 0) {
      ::close(to_child[0]);
      ::close(to_child[1]);
      throw RuntimeError("pipe() failed");
    }
    pid_ = ::fork();
    if (pid_ < 0) throw RuntimeError("fork() failed");
    if (pid_ == 0) {
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      ::close(to_child[0]);
      ::close(to_child[1]);
      ::close(from_child[0]);
      ::close(from_child[1]);
      ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::close(to_child[0]);
    ::close(from_child[1]);
    read_fd_ = from_child[0];

    std::ostringstream request;
    write_request(request, req);
    try {
      write_all(to_child[1], request.str());
    } catch (...) {
      ::close(to_child[1]);
      throw;
    }
    ::close(to_child[1]);
  }

  ~SubprocessGenerator() override {
    if (read_fd_ >= 0) ::close(read_fd_);
    if (pid_ > 0) {
      int status = 0;
      if (::waitpid(pid_, &status, WNOHANG) == 0) {
        ::kill(pid_, SIGTERM);
        ::waitpid(pid_, &status, 0);
      }
    }
  }

  void next(std::span<Token> frame) override {
    const std::string line = read_line();
    const auto tokens = parse_frame_line(line, num_samples_, quant_factor_);
    std::copy(tokens.begin(), tokens.end(), frame.begin());
  }

 private:
  std::string read_line() {
    while (true) {
      const std::size_t nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      char chunk[4096];
      const ssize_t n = ::read(read_fd_, chunk, sizeof chunk);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) throw RuntimeError("predictor process ended before emitting all frames");
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

  std::size_t num_samples_;
  std::uint32_t quant_factor_;
  pid_t pid_ = -1;
  int read_fd_ = -1;
  std::string buffer_;
};

class SubprocessPredictor final : public Predictor {
 public:
  explicit SubprocessPredictor(std::string command) : command_(std::move(command)) {}

  std::string describe() const override { return "external(" + command_ + ")"; }

  std::unique_ptr<FrameGenerator> start(const ForecastRequest& req) const override {
    validate(req);
    return std::make_unique<SubprocessGenerator>(command_, req);
  }

 private:
  std::string command_;
};

}  // namespace

std::string format_frame_line(std::span<const Token> frame) {
  std::string line;
  for (std::size_t i = 0; i < frame.size(); ++i) {
    if (i > 0) line += ',';
    line += std::to_string(frame[i]);
  }
  return line;
}

std::vector<Token> parse_frame_line(std::string_view line, std::size_t num_samples,
                                    std::uint32_t quant_factor) {
  const auto fields = split(line, ',');
  if (fields.size() != num_samples) {
    throw InputError("frame line has " + std::to_string(fields.size()) + " tokens, expected " +
                     std::to_string(num_samples));
  }
  std::vector<Token> out;
  out.reserve(fields.size());
  for (auto f : fields) {
    const auto t = parse_number<Token>(f, "token");
    if (t > quant_factor) throw InputError("token " + std::to_string(t) + " exceeds quant factor");
    out.push_back(t);
  }
  return out;
}

void write_request(std::ostream& out, const ForecastRequest& req) {
  out << kProtocolTag << " horizon=" << req.horizon << " samples=" << req.num_samples
      << " seed=" << req.seed << " quant=" << req.context.config.quant_factor << '\n'
      << format_frame_line(req.context.tokens) << '\n';
}

ForecastRequest read_request(std::istream& in) {
  std::string header;
  std::string context;
  if (!std::getline(in, header) || !std::getline(in, context)) {
    throw InputError("incomplete forecast request");
  }
  const auto fields = split(header, ' ');
  if (fields.empty() || fields[0] != kProtocolTag) {
    throw InputError("request does not start with " + std::string(kProtocolTag));
  }
  ForecastRequest req;
  bool seen_h = false, seen_s = false, seen_q = false;
  for (std::size_t i = 1; i < fields.size(); ++i) {
    const auto kv = fields[i];
    const auto eq = kv.find('=');
    if (eq == std::string_view::npos) throw InputError("malformed request field '" + std::string(kv) + "'");
    const auto key = kv.substr(0, eq);
    const auto value = kv.substr(eq + 1);
    if (key == "horizon") {
      req.horizon = parse_number<std::size_t>(value, "horizon");
      seen_h = true;
    } else if (key == "samples") {
      req.num_samples = parse_number<std::size_t>(value, "samples");
      seen_s = true;
    } else if (key == "seed") {
      req.seed = parse_number<std::uint64_t>(value, "seed");
    } else if (key == "quant") {
      req.context.config.quant_factor = parse_number<std::uint32_t>(value, "quant");
      seen_q = true;
    } else {
      throw InputError("unknown request field '" + std::string(key) + "'");
    }
  }
  if (!seen_h || !seen_s || !seen_q) throw InputError("request header lacks horizon, samples or quant");
  if (!context.empty() && context.back() == '\r') context.pop_back();
  for (auto f : split(context, ',')) req.context.tokens.push_back(parse_number<Token>(f, "context token"));
  validate(req);
  return req;
}

void serve_request(const PredictorHandle& handle, std::istream& in, std::ostream& out) {
  const ForecastRequest req = read_request(in);
  auto generator = handle.model->start(req);
  std::vector<Token> frame(req.num_samples);
  for (std::size_t j = 0; j < req.horizon; ++j) {
    generator->next(frame);
    out << format_frame_line(frame) << '\n' << std::flush;
  }
}

PredictorHandle make_subprocess_predictor(std::string command, Role role) {
  auto model = std::make_shared<SubprocessPredictor>(std::move(command));
  PredictorHandle h;
  h.model_id = model->describe();
  h.role = role;
  h.model = std::move(model);
  return h;
}

}  // namespace apollo::forecast
