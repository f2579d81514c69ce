#include "miso/deploy/stack_manager.h"

#include <fcntl.h>
#include <netinet/in.h>
#include <arpa/inet.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <csignal>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <thread>

#include "miso/common/config.h"
#include "miso/common/file_util.h"
#include "miso/crypto/prf.h"
#include "miso/enclave/attestation_platform.h"
#include "miso/harness/local_stack.h"
#include "miso/idp/fixtures.h"
#include "miso/idp/idp_service.h"
#include "miso/mixer/mixer_service.h"
#include "miso/net/http_client.h"
#include "miso/net/url.h"
#include "miso/rp/rp_service.h"

namespace miso::deploy {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr char kLayoutFile[] = "layout.json";
constexpr int kRpPortOffset = 50;
constexpr int kBaselinePortOffset = 99;
constexpr auto kStopTimeout = std::chrono::seconds(10);
constexpr auto kPollInterval = std::chrono::milliseconds(50);

fs::path RunDir(const fs::path& state_dir) { return state_dir / "run"; }
fs::path LogDir(const fs::path& state_dir) { return state_dir / "logs"; }
fs::path PidFile(const fs::path& state_dir, const std::string& name) {
  return RunDir(state_dir) / (name + ".pid");
}
fs::path LogFile(const fs::path& state_dir, const std::string& name) {
  return LogDir(state_dir) / (name + ".log");
}

std::string UrlFor(const std::string& host, int port) {
  return "http://" + host + ":" + std::to_string(port);
}

std::optional<int> ReadPid(const fs::path& path) {
  auto text = ReadFileIfExists(path);
  if (!text) return std::nullopt;
  try {
    return std::stoi(*text);
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

// True iff |pid| is a live (non-zombie) process started by Serve.
bool IsServiceProcess(int pid) {
  if (pid <= 0) return false;
  const fs::path proc = "/proc/" + std::to_string(pid);
  auto stat = ReadFileIfExists(proc / "stat");
  if (!stat) return false;
  auto close_paren = stat->rfind(')');
  if (close_paren == std::string::npos || close_paren + 2 >= stat->size()) return false;
  if ((*stat)[close_paren + 2] == 'Z') return false;
  auto cmdline = ReadFileIfExists(proc / "cmdline");
  return cmdline && cmdline->find("serve-") != std::string::npos;
}

bool Healthy(const std::string& host, int port) {
  net::ClientOptions options;
  options.connect_timeout = std::chrono::seconds(1);
  options.read_timeout = std::chrono::seconds(2);
  net::HttpClient http(options);
  return http.Get(UrlFor(host, port) + "/healthz").status == 200;
}

bool PortFree(const std::string& host, int port) {
  int fd = ::socket(AF_INET, SOCK_STREAM | SOCK_CLOEXEC, 0);
  if (fd < 0) return false;
  int one = 1;
  ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<uint16_t>(port));
  if (::inet_pton(AF_INET, host.c_str(), &addr.sin_addr) != 1) {
    ::close(fd);
    throw DeployError("host must be an IPv4 address: " + host);
  }
  bool ok = ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0;
  ::close(fd);
  return ok;
}

std::string LogTail(const fs::path& path, size_t max_bytes = 600) {
  auto text = ReadFileIfExists(path).value_or("");
  if (text.size() > max_bytes) text = text.substr(text.size() - max_bytes);
  return text;
}

pid_t Spawn(const fs::path& executable, const ServiceSpec& spec, const fs::path& log) {
  int log_fd = ::open(log.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (log_fd < 0) throw DeployError("cannot open log " + log.string());
  const std::string subcommand = "serve-" + spec.kind;
  pid_t pid = ::fork();
  if (pid < 0) {
    ::close(log_fd);
    throw DeployError(std::string("fork failed: ") + std::strerror(errno));
  }
  if (pid == 0) {
    ::setsid();
    int null_fd = ::open("/dev/null", O_RDONLY);
    if (null_fd >= 0) ::dup2(null_fd, STDIN_FILENO);
    ::dup2(log_fd, STDOUT_FILENO);
    ::dup2(log_fd, STDERR_FILENO);
    const std::string exe = executable.string();
    const std::string config = spec.config.string();
    const char* argv[] = {exe.c_str(), subcommand.c_str(), "--config", config.c_str(), nullptr};
    ::execv(exe.c_str(), const_cast<char* const*>(argv));
    std::fprintf(stderr, "exec %s failed: %s\n", exe.c_str(), std::strerror(errno));
    ::_exit(127);
  }
  ::close(log_fd);
  return pid;
}

// Sends SIGTERM and waits for exit, escalating to SIGKILL after a timeout.
void Terminate(int pid) {
  if (!IsServiceProcess(pid)) return;
  ::kill(pid, SIGTERM);
  const auto deadline = std::chrono::steady_clock::now() + kStopTimeout;
  while (std::chrono::steady_clock::now() < deadline) {
    ::waitpid(pid, nullptr, WNOHANG);
    if (!IsServiceProcess(pid)) return;
    std::this_thread::sleep_for(kPollInterval);
  }
  ::kill(pid, SIGKILL);
  ::waitpid(pid, nullptr, WNOHANG);
}

void StopServices(const fs::path& state_dir, const std::vector<ServiceSpec>& started) {
  for (auto it = started.rbegin(); it != started.rend(); ++it) {
    const fs::path pid_file = PidFile(state_dir, it->name);
    if (auto pid = ReadPid(pid_file)) Terminate(*pid);
    std::error_code ec;
    fs::remove(pid_file, ec);
  }
}

void WaitHealthy(const std::string& host, const ServiceSpec& spec, pid_t pid,
                 const fs::path& log, std::chrono::seconds timeout) {
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  while (std::chrono::steady_clock::now() < deadline) {
    int status = 0;
    if (::waitpid(pid, &status, WNOHANG) == pid) {
      throw DeployError(spec.name + " exited during startup:\n" + LogTail(log));
    }
    if (Healthy(host, spec.port)) return;
    std::this_thread::sleep_for(kPollInterval);
  }
  throw DeployError(spec.name + " did not become healthy within " +
                    std::to_string(timeout.count()) + " s:\n" + LogTail(log));
}

void WriteConfig(const fs::path& path, const KeyValueConfig& config) {
  fs::create_directories(path.parent_path());
  AtomicWriteFile(path, config.Serialize());
}

StackLayout CreateLayout(const UpOptions& o) {
  if (o.idp_count < 1 || o.idp_count > 26) throw DeployError("idp count must be in [1, 26]");
  if (o.rp_count < 0 || o.rp_count >= kRpPortOffset) {
    throw DeployError("rp count must be in [0, " + std::to_string(kRpPortOffset - 1) + "]");
  }
  if (o.base_port < 1024 || o.base_port + kBaselinePortOffset > 65535) {
    throw DeployError("base port must leave room for 100 ports below 65536");
  }
  StackLayout layout;
  layout.host = o.host;
  layout.seal_mode = o.seal_mode;
  layout.users_per_idp = o.users_per_idp;
  const fs::path& root = o.state_dir;
  const std::string mixer_url = UrlFor(o.host, o.base_port);
  const std::string transcript = o.record_transcript ? "true" : "false";
  const std::string threads = std::to_string(o.worker_threads);

  KeyValueConfig mixer;
  mixer.Set("listen_addr", o.host + ":" + std::to_string(o.base_port));
  mixer.Set("state_dir", (root / "mixer").string());
  mixer.Set("seal_mode", std::string(enclave::SealModeName(o.seal_mode)));
  mixer.Set("program_descriptor", mixer::kDefaultProgramDescriptor);
  mixer.Set("plaintext", "true");
  mixer.Set("debug_transcript", transcript);
  mixer.Set("worker_threads", threads);

  for (int i = 0; i < o.idp_count; ++i) {
    const std::string id = harness::IdpIdForIndex(i);
    const int port = o.base_port + 1 + i;
    const std::string url = UrlFor(o.host, port);
    const fs::path dir = root / id;
    fs::create_directories(dir);
    idp::Fixtures fixtures = idp::GenerateFixtures(id, o.users_per_idp);
    fixtures.pbkdf2_iterations = o.pbkdf2_iterations;
    fixtures.Save(dir / "fixtures.json");

    KeyValueConfig c;
    c.Set("listen_addr", o.host + ":" + std::to_string(port));
    c.Set("idp_id", id);
    c.Set("display_name", id);
    c.Set("state_dir", dir.string());
    c.Set("fixtures", (dir / "fixtures.json").string());
    c.Set("debug_transcript", transcript);
    c.Set("worker_threads", threads);
    WriteConfig(dir / "idp.conf", c);
    layout.services.push_back({id, "idp", port, dir / "idp.conf"});

    const std::string prefix = "idp." + id + ".";
    mixer.Set(prefix + "auth_url", url + "/auth_IdP");
    mixer.Set(prefix + "token_url", url + "/token_IdP");
    mixer.Set(prefix + "res_url", url + "/res_IdP");
    mixer.Set(prefix + "register_url", url + "/register");
  }
  WriteConfig(root / "mixer" / "mixer.conf", mixer);
  layout.services.push_back({"mixer", "mixer", o.base_port, root / "mixer" / "mixer.conf"});

  // The RPs' trust anchors: the platform key of this host and the measurement
  // of the program the mixer runs.
  auto platform = enclave::AttestationPlatform::Open(root / "mixer" / "platform");
  const std::string tee_pk = crypto::HexEncode(platform->GetPublicKey());
  const std::string measurement =
      crypto::HexEncode(crypto::Sha256(crypto::AsBytes(mixer::kDefaultProgramDescriptor)));

  for (int i = 0; i < o.rp_count; ++i) {
    const std::string name = "rp-" + std::to_string(i);
    const int port = o.base_port + kRpPortOffset + i;
    KeyValueConfig c;
    c.Set("listen_addr", o.host + ":" + std::to_string(port));
    c.Set("rp_id", name);
    c.Set("state_dir", (root / name).string());
    c.Set("mixer_url", mixer_url);
    c.Set("expected_measurement", measurement);
    c.Set("tee_public_key", tee_pk);
    c.Set("debug_transcript", transcript);
    c.Set("worker_threads", threads);
    WriteConfig(root / name / "rp.conf", c);
    layout.services.push_back({name, "rp", port, root / name / "rp.conf"});
  }
  if (o.baseline_rp) {
    const std::string name = "rp-baseline";
    const int port = o.base_port + kBaselinePortOffset;
    KeyValueConfig c;
    c.Set("listen_addr", o.host + ":" + std::to_string(port));
    c.Set("rp_id", name);
    c.Set("state_dir", (root / name).string());
    c.Set("baseline_mode", "true");
    c.Set("idp_url", UrlFor(o.host, o.base_port + 1));
    c.Set("debug_transcript", transcript);
    c.Set("worker_threads", threads);
    WriteConfig(root / name / "rp.conf", c);
    layout.services.push_back({name, "rp", port, root / name / "rp.conf"});
  }
  AtomicWriteFile(root / kLayoutFile, layout.ToJson().dump(2));
  return layout;
}

std::optional<StackLayout> LoadLayout(const fs::path& state_dir) {
  auto text = ReadFileIfExists(state_dir / kLayoutFile);
  if (!text) return std::nullopt;
  return StackLayout::FromJson(json::parse(*text));
}

std::string ReadJsonString(const fs::path& path, const std::string& key) {
  auto text = ReadFileIfExists(path);
  if (!text) return "";
  json j = json::parse(*text, nullptr, false);
  return j.is_object() ? j.value(key, "") : "";
}

harness::Topology BuildTopology(const fs::path& state_dir, const StackLayout& layout) {
  harness::Topology t;
  t.seal_mode = std::string(enclave::SealModeName(layout.seal_mode));
  t.users_per_idp = layout.users_per_idp;
  for (const auto& s : layout.services) {
    if (s.kind == "mixer") t.mixer_url = UrlFor(layout.host, s.port);
  }
  const std::string callback = t.mixer_url + "/callback";
  for (const auto& s : layout.services) {
    const std::string url = UrlFor(layout.host, s.port);
    const KeyValueConfig config = KeyValueConfig::Load(s.config);
    if (s.kind == "idp") {
      std::string mixer_client_id;
      auto clients = ReadFileIfExists(state_dir / s.name / "clients.json");
      if (clients) {
        for (const auto& c : json::parse(*clients)) {
          if (c.value("redirect_uri", "") == callback) mixer_client_id = c.value("client_id", "");
        }
      }
      t.idps.push_back({s.name, url, mixer_client_id});
    } else if (s.kind == "rp") {
      const std::string client_id =
          ReadJsonString(state_dir / s.name / "credentials.json", "client_id");
      const bool baseline = config.GetBool("baseline_mode", false);
      std::string idp;
      if (baseline) {
        const std::string idp_url = config.Require("idp_url");
        for (const auto& other : layout.services) {
          if (other.kind == "idp" && UrlFor(layout.host, other.port) == idp_url) idp = other.name;
        }
      } else if (t.measurement.empty()) {
        t.measurement = config.Require("expected_measurement");
        t.tee_public_key = config.Require("tee_public_key");
      }
      t.rps.push_back({s.name, url, client_id, baseline, idp});
    }
  }
  return t;
}

}  // namespace

fs::path ResolveStateDir(const std::string& flag) {
  if (!flag.empty()) return fs::absolute(flag);
  if (const char* env = std::getenv(kStateDirEnv); env != nullptr && *env != '\0') {
    return fs::absolute(env);
  }
  return fs::absolute("miso-state");
}

json StackLayout::ToJson() const {
  json services_json = json::array();
  for (const auto& s : services) {
    services_json.push_back(
        {{"name", s.name}, {"kind", s.kind}, {"port", s.port}, {"config", s.config.string()}});
  }
  return {{"host", host},
          {"seal_mode", std::string(enclave::SealModeName(seal_mode))},
          {"users_per_idp", users_per_idp},
          {"services", std::move(services_json)}};
}

StackLayout StackLayout::FromJson(const json& j) {
  StackLayout layout;
  layout.host = j.at("host");
  layout.seal_mode = enclave::ParseSealMode(j.at("seal_mode").get<std::string>());
  layout.users_per_idp = j.value("users_per_idp", 0);
  for (const auto& s : j.at("services")) {
    layout.services.push_back({s.at("name"), s.at("kind"), s.at("port"),
                               fs::path(s.at("config").get<std::string>())});
  }
  return layout;
}

bool StackStatus::running() const {
  if (services.empty()) return false;
  for (const auto& s : services) {
    if (!s.alive || !s.healthy) return false;
  }
  return true;
}

json StackStatus::ToJson() const {
  json arr = json::array();
  for (const auto& s : services) {
    arr.push_back({{"name", s.name},
                   {"port", s.port},
                   {"pid", s.pid ? json(*s.pid) : json(nullptr)},
                   {"alive", s.alive},
                   {"healthy", s.healthy}});
  }
  return {{"running", running()}, {"services", std::move(arr)}};
}

std::string StackStatus::FormatTable() const {
  if (services.empty()) return "no stack configured\n";
  std::string out;
  char line[160];
  std::snprintf(line, sizeof(line), "%-14s %6s %8s %s\n", "service", "port", "pid", "state");
  out += line;
  for (const auto& s : services) {
    const char* state = s.alive ? (s.healthy ? "healthy" : "unhealthy") : "stopped";
    std::snprintf(line, sizeof(line), "%-14s %6d %8s %s\n", s.name.c_str(), s.port,
                  s.pid && s.alive ? std::to_string(*s.pid).c_str() : "-", state);
    out += line;
  }
  return out;
}

StackStatus Status(const fs::path& state_dir) {
  StackStatus status;
  auto layout = LoadLayout(state_dir);
  if (!layout) return status;
  for (const auto& s : layout->services) {
    ServiceStatus st;
    st.name = s.name;
    st.port = s.port;
    st.pid = ReadPid(PidFile(state_dir, s.name));
    st.alive = st.pid && IsServiceProcess(*st.pid);
    st.healthy = st.alive && Healthy(layout->host, s.port);
    status.services.push_back(std::move(st));
  }
  return status;
}

harness::Topology Up(const UpOptions& options) {
  if (options.executable.empty()) throw DeployError("no service executable given");
  const fs::path& root = options.state_dir;
  fs::create_directories(root);
  for (const auto& s : Status(root).services) {
    if (s.alive) {
      throw DeployError("stack in " + root.string() + " is already running (" + s.name +
                        " has pid " + std::to_string(*s.pid) + "); run `miso down` first");
    }
  }
  StackLayout layout;
  if (auto existing = LoadLayout(root)) {
    layout = *existing;
  } else {
    layout = CreateLayout(options);
  }
  for (const auto& s : layout.services) {
    if (!PortFree(layout.host, s.port)) {
      throw DeployError("port " + std::to_string(s.port) + " for " + s.name + " is in use");
    }
  }

  fs::create_directories(RunDir(root));
  fs::create_directories(LogDir(root));
  std::vector<ServiceSpec> started;
  try {
    for (const auto& s : layout.services) {
      const fs::path log = LogFile(root, s.name);
      pid_t pid = Spawn(options.executable, s, log);
      AtomicWriteFile(PidFile(root, s.name), std::to_string(pid));
      started.push_back(s);
      WaitHealthy(layout.host, s, pid, log, options.startup_timeout);
    }
    harness::Topology topology = BuildTopology(root, layout);
    topology.Save(root / kStackFile);
    return topology;
  } catch (...) {
    StopServices(root, started);
    throw;
  }
}

void Down(const fs::path& state_dir, bool wipe) {
  if (auto layout = LoadLayout(state_dir)) StopServices(state_dir, layout->services);
  std::error_code ec;
  fs::remove(state_dir / kStackFile, ec);
  if (wipe && fs::exists(state_dir)) {
    for (const auto& entry : fs::directory_iterator(state_dir)) fs::remove_all(entry.path());
  }
}

namespace {

template <typename Service>
int RunUntilSignal(Service& service, const std::string& host, int port, sigset_t* signals) {
  service.Listen(host, port);
  std::printf("listening on %s\n", service.base_url().c_str());
  std::fflush(stdout);
  int sig = 0;
  sigwait(signals, &sig);
  std::printf("received signal %d, stopping\n", sig);
  std::fflush(stdout);
  service.Stop();
  return 0;
}

}  // namespace

int Serve(const std::string& kind, const fs::path& config_path) {
  // Block the stop signals before any thread starts so only sigwait sees them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGTERM);
  sigaddset(&signals, SIGINT);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);
  try {
    const KeyValueConfig config = KeyValueConfig::Load(config_path);
    auto addr = net::ParseHostPort(config.Require("listen_addr"));
    if (!addr) throw ConfigError("listen_addr must be host:port");
    if (kind == "idp") {
      idp::IdpService service(idp::IdpOptions::FromConfig(config));
      return RunUntilSignal(service, addr->host, addr->port, &signals);
    }
    if (kind == "mixer") {
      mixer::MixerService service(mixer::MixerOptions::FromConfig(config));
      return RunUntilSignal(service, addr->host, addr->port, &signals);
    }
    if (kind == "rp") {
      rp::RpService service(rp::RpOptions::FromConfig(config));
      return RunUntilSignal(service, addr->host, addr->port, &signals);
    }
    std::fprintf(stderr, "error: unknown service kind %s\n", kind.c_str());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

}  // namespace miso::deploy
