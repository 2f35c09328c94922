// Copyright 2026 The longconv Authors
// SPDX-License-Identifier: Apache-2.0
//
// Speaker labels for the three pipelines: reconciling a separate
// diarizer's segments with ASR words, reading speaker tokens out of joint
// output, and SD+ (joint utterance bounds, speakers from clustered
// utterance-averaged embeddings).

#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "longconv/decoder.hpp"
#include "longconv/features.hpp"
#include "longconv/transcript.hpp"

namespace longconv::diarize {

using Embedding = std::vector<double>;

/// sum_p wbar[p] * frames[window_start + p], wbar being the attention
/// averaged over layers and heads.
Embedding word_embedding_from_af(const FrameMatrix& frames, const decoder::AttentionSnapshot& attention,
                                 std::size_t window_start);

/// Unweighted mean. Throws ContractError for an empty set or mixed sizes.
Embedding utterance_embedding(std::span<const Embedding> word_embeddings);

enum class ClusterAlgorithm { kHdbscan, kAgglomerative };
enum class Distance { kEuclidean, kCosine };

ClusterAlgorithm parse_cluster_algorithm(std::string_view text);
Distance parse_distance(std::string_view text);

struct ClusterConfig {
  ClusterAlgorithm algorithm = ClusterAlgorithm::kHdbscan;
  Distance distance = Distance::kEuclidean;
  std::size_t min_cluster_size = 5;
  std::size_t min_samples = 0;       // 0: same as min_cluster_size
  double distance_threshold = 1.0;   // agglomerative: merge while average linkage <= threshold

  void validate() const;
};

double distance(const Embedding& a, const Embedding& b, Distance metric);

/// Cluster id per embedding, numbered 0, 1, ... by first appearance. HDBSCAN
/// noise points join the cluster with the nearest centroid; when no cluster
/// stands out everything forms one cluster.
std::vector<std::size_t> cluster_speakers(std::span<const Embedding> embeddings, const ClusterConfig& config);

struct DiarizationSegment {
  TimeSpan span;
  std::string cluster;
};

/// Lines of "start end clusterId"; '#' starts a comment. Segments must be
/// sorted and non-overlapping.
std::vector<DiarizationSegment> parse_segments(std::istream& in, std::string_view source);
std::vector<DiarizationSegment> load_segments(const std::filesystem::path& path);

/// Label of the segment overlapping [start, end] the most (earlier segment on
/// ties), or of the nearest segment when none overlaps.
const std::string& segment_label(std::span<const DiarizationSegment> segments, const TimeSpan& word);

/// Gives every word the label of its best segment (stored as per-word
/// speakers); the utterance speaker becomes the most frequent word label.
/// Every word needs a time span. Throws ValidationError for an empty segment
/// list.
Conversation reconcile_separate(const Conversation& asr, std::span<const DiarizationSegment> segments);

struct JointExtraction {
  std::vector<Utterance> utterances;
  std::size_t unknown = 0;    // segments without a speaker token
  std::size_t malformed = 0;  // speaker token misplaced or repeated
};

/// Splits at separators; the segment's final speaker token labels its words.
/// Utterances carry no timing.
JointExtraction extract_joint_speakers(std::span<const std::string> tokens);

/// Same over a whole transcript whose text holds joint tokens. Segment spans
/// cover the timed tokens, or the source utterances when words are untimed.
JointExtraction extract_joint_speakers(const Conversation& conversation);

/// Attention of one word over the embedding frames.
struct WordAttention {
  decoder::AttentionSnapshot attention;
  std::size_t window_start = 0;
};

/// Uniform attention over the frames whose start lies in the word's span
/// (at least one frame).
WordAttention uniform_word_attention(const TimeSpan& span, double frame_rate, std::size_t total_frames);

/// Replaces utterance speakers with clusters of utterance embeddings. The
/// attention list is parallel to the words of each utterance. Utterances
/// without words keep the unknown speaker.
std::vector<Utterance> sd_plus(const std::vector<Utterance>& utterances, const FrameMatrix& frames,
                               const std::vector<std::vector<WordAttention>>& attention,
                               const ClusterConfig& config);

/// Cluster labels as written to transcripts.
std::string cluster_label(std::size_t cluster);

}  // namespace longconv::diarize
