#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "clai/bench/tasks.hpp"
#include "clai/complexity/estimator.hpp"
#include "clai/core/types.hpp"
#include "clai/pipeline/pipeline.hpp"

// Distillation data: run the teacher through the prompt pipeline and turn
// each transcript into an instruction-tuning sample shaped by its tier.
namespace clai::datagen {

using SampleOutput = std::variant<std::string, DecomposedPlan>;

struct TrainingSample {
  std::string instruction;
  std::optional<std::string> input;
  SampleOutput output;
  // Set on generated samples; absent on hand-written ones.
  std::optional<complexity::Tier> tier;

  bool operator==(const TrainingSample&) const = default;
};

// Invariants, plus tier/format agreement when the tier is known:
// Low and Medium need a string, Medium needs at least one step line,
// High needs a plan.
ValidationResult validate_sample(const TrainingSample& s);

std::string encode_sample(const TrainingSample& s);
TrainingSample decode_sample(std::string_view line);

// Throws StorageError when the file cannot be written.
void write_jsonl(const std::vector<TrainingSample>& samples, const std::filesystem::path& path);
// Throws StorageError when unreadable, ParseError(line) on a bad line.
std::vector<TrainingSample> read_jsonl(const std::filesystem::path& path);

// Throws TeacherFailure when the pipeline fails and ValidationFailure when
// the run is degraded or the sample does not validate.
TrainingSample generate_sample(const Query& seed, pipeline::Pipeline& teacher);
TrainingSample generate_sample(const Query& seed, const pipeline::PipelineConfig& teacher_cfg);

// The sample derived from an already finished transcript.
TrainingSample sample_from_transcript(const Query& seed, const PipelineTranscript& t);

struct DatagenOptions {
  int workers = 1;
  // Fraction of each benchmark's seeds to use, first ones first; benchmarks
  // not listed use all of theirs.
  std::map<std::string, double> mixture;
};

struct SeedFailure {
  std::string seed_id;
  ErrorKind kind = ErrorKind::TeacherFailure;
  std::string message;
};

struct DatagenReport {
  // In seed order, unique by instruction.
  std::vector<TrainingSample> samples;
  std::vector<SeedFailure> failures;
  std::size_t duplicates = 0;
  std::map<complexity::Tier, std::size_t> histogram;
};

DatagenReport generate_dataset(const std::vector<bench::TaskRecord>& seeds, pipeline::Pipeline& teacher,
                               const DatagenOptions& options = {});

}  // namespace clai::datagen
