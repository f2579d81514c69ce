#include "miso/deploy/stack_manager.h"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <string>

#include <gtest/gtest.h>

#include "miso/common/config.h"
#include "miso/common/file_util.h"
#include "miso/harness/driver.h"
#include "test_util.h"

namespace miso::deploy {
namespace {

using ::miso::testing::TempDir;

int RunMiso(const std::string& args) {
  const std::string cmd = std::string(MISO_BINARY) + " " + args + " >/dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Holds a listening socket on a loopback port.
class PortHolder {
 public:
  explicit PortHolder(int port) {
    fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    int one = 1;
    ::setsockopt(fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<uint16_t>(port));
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    bound_ = ::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0 &&
             ::listen(fd_, 1) == 0;
  }
  ~PortHolder() { ::close(fd_); }
  bool bound() const { return bound_; }

 private:
  int fd_ = -1;
  bool bound_ = false;
};

int FreeBasePort() {
  for (int base = 30000 + (::getpid() % 250) * 100; base < 60000; base += 100) {
    bool free = true;
    for (int offset : {0, 1, 2, 50, 99}) {
      PortHolder probe(base + offset);
      free = free && probe.bound();
    }
    if (free) return base;
  }
  return 0;
}

class DeployTest : public ::testing::Test {
 protected:
  void SetUp() override {
    base_port_ = FreeBasePort();
    ASSERT_NE(base_port_, 0);
    flags_ = "--state-dir " + dir_.path().string();
  }
  void TearDown() override { RunMiso(flags_ + " down"); }

  std::string UpCommand() const {
    return flags_ + " up --idps 2 --rps 1 --users 4 --workers 4 --base-port " +
           std::to_string(base_port_);
  }

  harness::Topology Descriptor() const {
    return harness::Topology::Load(dir_.path() / kStackFile);
  }

  TempDir dir_;
  int base_port_ = 0;
  std::string flags_;
};

TEST_F(DeployTest, UpDownUpKeepsIdentity) {
  ASSERT_EQ(RunMiso(UpCommand()), 0);
  auto first = Descriptor();
  EXPECT_EQ(first.idps.size(), 2u);
  ASSERT_EQ(first.rps.size(), 2u);
  EXPECT_FALSE(first.idps[0].mixer_client_id.empty());
  EXPECT_TRUE(Status(dir_.path()).running());
  EXPECT_EQ(RunMiso(flags_ + " status"), 0);

  auto login = harness::DriveLogin(first, *first.MisoRps()[0], {"alice", {"idp-a"}});
  ASSERT_TRUE(login.ok) << login.error;

  EXPECT_EQ(RunMiso(UpCommand()), 1);

  ASSERT_EQ(RunMiso(flags_ + " down"), 0);
  EXPECT_FALSE(Status(dir_.path()).running());
  EXPECT_EQ(RunMiso(flags_ + " status"), 3);
  EXPECT_TRUE(std::filesystem::exists(dir_.path() / "mixer" / "prf_key.sealed"));
  EXPECT_EQ(RunMiso(flags_ + " down"), 0);

  ASSERT_EQ(RunMiso(UpCommand()), 0);
  auto second = Descriptor();
  EXPECT_EQ(second.measurement, first.measurement);
  EXPECT_EQ(second.tee_public_key, first.tee_public_key);
  EXPECT_EQ(second.rps[0].client_id, first.rps[0].client_id);
  EXPECT_EQ(second.idps[0].mixer_client_id, first.idps[0].mixer_client_id);
  auto again = harness::DriveLogin(second, *second.MisoRps()[0], {"alice", {"idp-a"}});
  ASSERT_TRUE(again.ok) << again.error;
  EXPECT_EQ(again.sub, login.sub);
  EXPECT_EQ(again.account["account_id"], login.account["account_id"]);

  ASSERT_EQ(RunMiso(flags_ + " down --wipe"), 0);
  EXPECT_TRUE(std::filesystem::is_empty(dir_.path()));
}

TEST_F(DeployTest, PortConflictAbortsCleanly) {
  PortHolder squatter(base_port_ + 1);
  ASSERT_TRUE(squatter.bound());
  EXPECT_EQ(RunMiso(UpCommand()), 1);
  EXPECT_FALSE(std::filesystem::exists(dir_.path() / kStackFile));
  for (const auto& s : Status(dir_.path()).services) EXPECT_FALSE(s.alive) << s.name;
}

TEST_F(DeployTest, FailedAttestationTearsDownPartialStack) {
  ASSERT_EQ(RunMiso(UpCommand()), 0);
  ASSERT_EQ(RunMiso(flags_ + " down"), 0);
  const auto conf = dir_.path() / "rp-0" / "rp.conf";
  auto config = KeyValueConfig::Load(conf);
  config.Set("expected_measurement", std::string(64, '0'));
  AtomicWriteFile(conf, config.Serialize());
  std::filesystem::remove(dir_.path() / "rp-0" / "pinned_mixer.json");

  EXPECT_EQ(RunMiso(UpCommand()), 1);
  for (const auto& s : Status(dir_.path()).services) EXPECT_FALSE(s.alive) << s.name;
  PortHolder idp_port(base_port_ + 1);
  EXPECT_TRUE(idp_port.bound());
}

TEST(ResolveStateDirTest, FlagThenEnvironment) {
  EXPECT_EQ(ResolveStateDir("/tmp/x"), std::filesystem::path("/tmp/x"));
  ::setenv(kStateDirEnv, "/tmp/from-env", 1);
  EXPECT_EQ(ResolveStateDir(""), std::filesystem::path("/tmp/from-env"));
  ::unsetenv(kStateDirEnv);
  EXPECT_EQ(ResolveStateDir("").filename(), "miso-state");
}

}  // namespace
}  // namespace miso::deploy
