#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "civic/ledger.hpp"

namespace civic {

class UniqueFd {
public:
    UniqueFd() = default;
    explicit UniqueFd(int fd) : fd_(fd) {}
    UniqueFd(UniqueFd&& other) noexcept : fd_(std::exchange(other.fd_, -1)) {}
    UniqueFd& operator=(UniqueFd&& other) noexcept
    {
        if (this != &other) {
            reset();
            fd_ = std::exchange(other.fd_, -1);
        }
        return *this;
    }
    UniqueFd(const UniqueFd&) = delete;
    UniqueFd& operator=(const UniqueFd&) = delete;
    ~UniqueFd() { reset(); }

    int get() const { return fd_; }
    void reset();

private:
    int fd_ = -1;
};

// Append-only block store. When backed by a directory it persists
//   blocks.dat  sequence of [u32 big-endian length][Block::encode()]
//   blocks.idx  sequence of u64 big-endian offsets into blocks.dat, one per height
// Blocks are written only after they commit. On open, an indexed record that
// does not decode is CorruptStore(height); records past the index are kept if
// they decode whole and dropped as a torn write otherwise, and the index is
// rebuilt to match.
class BlockStore {
public:
    static BlockStore in_memory();
    static BlockStore open(const std::filesystem::path& dir, bool sync_writes = true);

    BlockStore(BlockStore&&) noexcept = default;
    BlockStore& operator=(BlockStore&&) noexcept = default;

    bool empty() const { return blocks_.empty(); }
    std::size_t size() const { return blocks_.size(); }
    std::uint64_t height() const { return blocks_.size() - 1; }
    const Block& at(std::uint64_t h) const { return *blocks_.at(h); }
    const Block& tip() const { return *blocks_.back(); }
    std::shared_ptr<const Block> shared_at(std::uint64_t h) const { return blocks_.at(h); }
    const std::vector<std::shared_ptr<const Block>>& blocks() const { return blocks_; }
    bool persistent() const { return !dir_.empty(); }
    const std::filesystem::path& directory() const { return dir_; }

    // Raw append; callers go through append_block() or install the genesis.
    void append(const Block& block);

    static std::filesystem::path data_file(const std::filesystem::path& dir) { return dir / "blocks.dat"; }
    static std::filesystem::path index_file(const std::filesystem::path& dir) { return dir / "blocks.idx"; }

private:
    BlockStore() = default;
    void write_record(const Block& block);

    std::vector<std::shared_ptr<const Block>> blocks_;
    std::filesystem::path dir_;
    bool sync_ = true;
    UniqueFd data_fd_;
    UniqueFd index_fd_;
    std::uint64_t data_size_ = 0;
};

} // namespace civic
