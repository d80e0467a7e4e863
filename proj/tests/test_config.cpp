#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"
#include "rgsvae/config.hpp"
#include "testutil.hpp"

using namespace rgsvae;

namespace {

std::string base_config() {
  return R"(# sample run
layer_widths = 10,20
data_dim = 784
seed = 7
eval_seed = 1234
batch_size = 150
epochs = 5
alpha = 0.002
beta1 = 0.9
beta2 = 0.999
bn_momentum = 0.9
bn_eps = 1e-05
eval_is_samples = 0
binarize_mode = static
binarize_threshold = 0.5
train_images = data/train-images-idx3-ubyte
test_images = data/t10k-images-idx3-ubyte
out_dir = runs/tiny
max_train_images = 1000
max_test_images = 1000
checkpoint_every = 0
)";
}

}  // namespace

TEST_CASE("config parses the documented keys") {
  const RunConfig c = parse_run_config(base_config());
  CHECK(c.layer_widths == std::vector<int64_t>{10, 20});
  CHECK(c.data_dim == 784);
  CHECK(c.seed == 7);
  CHECK(c.batch_size == 150);
  CHECK(c.epochs == 5);
  CHECK(c.binarize_mode == "static");
  CHECK(c.max_train_images == 1000);
  CHECK(c.model_spec().levels() == 1);
  CHECK(c.train_config().alpha == 0.002);
}

TEST_CASE("config round trip is identity") {
  const RunConfig c = parse_run_config(base_config());
  const std::string text = serialize_run_config(c);
  const RunConfig c2 = parse_run_config(text);
  CHECK(serialize_run_config(c2) == text);
  CHECK(c2.layer_widths == c.layer_widths);
  CHECK(c2.alpha == c.alpha);
  CHECK(c2.out_dir == c.out_dir);
  CHECK(c2.eval_seed == c.eval_seed);
}

TEST_CASE("config rejects unknown and missing keys") {
  CHECK_THROWS_WITH_AS(parse_run_config(base_config() + "mystery = 1\n"),
                       doctest::Contains("unknown config key 'mystery'"),
                       config_error);

  std::string text = base_config();
  const size_t pos = text.find("batch_size = 150\n");
  text.erase(pos, std::string("batch_size = 150\n").size());
  CHECK_THROWS_WITH_AS(parse_run_config(text),
                       doctest::Contains("missing config key 'batch_size'"),
                       config_error);
}

TEST_CASE("config rejects malformed values") {
  CHECK_THROWS_AS(
      parse_run_config(base_config() + "\nbatch_size = many\n"),
      config_error);  // duplicate key also fails
  std::string text = base_config();
  text.replace(text.find("batch_size = 150"), 16, "batch_size = onefifty");
  CHECK_THROWS_AS(parse_run_config(text), config_error);
  text = base_config();
  text.replace(text.find("binarize_mode = static"), 22,
               "binarize_mode = sometimes");
  CHECK_THROWS_AS(parse_run_config(text), config_error);
  CHECK_THROWS_AS(parse_run_config("odd line without equals\n"), config_error);
}

TEST_CASE("config validates semantic invariants") {
  std::string text = base_config();
  text.replace(text.find("batch_size = 150"), 16, "batch_size = 1");
  CHECK_THROWS_AS(parse_run_config(text), std::invalid_argument);
  text = base_config();
  text.replace(text.find("layer_widths = 10,20"), 20, "layer_widths = 10,0");
  CHECK_THROWS_AS(parse_run_config(text), std::invalid_argument);
}

TEST_CASE("comments and blank lines are ignored") {
  const RunConfig c = parse_run_config("  # leading comment\n\n" +
                                       base_config() +
                                       "\n# trailing comment\n");
  CHECK(c.seed == 7);
}
