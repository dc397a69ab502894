#include "civic/block_store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <iterator>

namespace civic {

namespace {

Bytes read_file(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    if (!in)
        return {};
    return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_all(int fd, ByteView data, const std::filesystem::path& what)
{
    std::size_t done = 0;
    while (done < data.size()) {
        const auto n = ::write(fd, data.data() + done, data.size() - done);
        if (n < 0) {
            if (errno == EINTR)
                continue;
            throw Error(Errc::Io, "write " + what.string() + ": " + std::strerror(errno));
        }
        done += static_cast<std::size_t>(n);
    }
}

int open_append(const std::filesystem::path& p)
{
    const int fd = ::open(p.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd < 0)
        throw Error(Errc::Io, "open " + p.string() + ": " + std::strerror(errno));
    return fd;
}

std::uint64_t be64(const std::uint8_t* p)
{
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
        v = (v << 8) | p[i];
    return v;
}

} // namespace

BlockStore BlockStore::in_memory()
{
    return BlockStore();
}

BlockStore BlockStore::open(const std::filesystem::path& dir, bool sync_writes)
{
    std::filesystem::create_directories(dir);
    BlockStore store;
    store.dir_ = dir;
    store.sync_ = sync_writes;

    const Bytes data = read_file(data_file(dir));
    const Bytes index = read_file(index_file(dir));
    const std::size_t indexed = index.size() / 8;

    std::uint64_t offset = 0;
    std::uint64_t height = 0;
    while (offset < data.size()) {
        const bool committed = height < indexed;
        if (committed && be64(index.data() + 8 * height) != offset)
            throw Error(Errc::CorruptStore, std::to_string(height));
        if (data.size() - offset < 4) {
            if (committed)
                throw Error(Errc::CorruptStore, std::to_string(height));
            break;
        }
        std::uint32_t len = 0;
        for (int i = 0; i < 4; ++i)
            len = (len << 8) | data[offset + i];
        if (data.size() - offset - 4 < len) {
            if (committed)
                throw Error(Errc::CorruptStore, std::to_string(height));
            break;
        }
        try {
            auto block = std::make_shared<const Block>(
                Block::decode(ByteView(data.data() + offset + 4, len)));
            store.blocks_.push_back(std::move(block));
        } catch (const Error&) {
            if (committed)
                throw Error(Errc::CorruptStore, std::to_string(height));
            break;
        }
        offset += 4 + len;
        ++height;
    }
    if (height < indexed)
        throw Error(Errc::CorruptStore, std::to_string(height));

    // Drop a torn tail and rewrite the index so both files agree.
    if (std::filesystem::exists(data_file(dir)))
        std::filesystem::resize_file(data_file(dir), offset);
    {
        std::ofstream idx(index_file(dir), std::ios::binary | std::ios::trunc);
        std::uint64_t pos = 0;
        for (const auto& b : store.blocks_) {
            Encoder e;
            e.u64(pos);
            const auto& bytes = e.data();
            idx.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
            pos += 4 + b->encode().size();
        }
    }
    store.data_size_ = offset;
    store.data_fd_ = UniqueFd(open_append(data_file(dir)));
    store.index_fd_ = UniqueFd(open_append(index_file(dir)));
    return store;
}

void UniqueFd::reset()
{
    if (fd_ >= 0)
        ::close(fd_);
    fd_ = -1;
}

void BlockStore::append(const Block& block)
{
    if (persistent())
        write_record(block);
    blocks_.push_back(std::make_shared<const Block>(block));
}

void BlockStore::write_record(const Block& block)
{
    const Bytes body = block.encode();
    Bytes record;
    record.reserve(body.size() + 4);
    const auto n = static_cast<std::uint32_t>(body.size());
    for (int shift = 24; shift >= 0; shift -= 8)
        record.push_back(static_cast<std::uint8_t>(n >> shift));
    record.insert(record.end(), body.begin(), body.end());

    write_all(data_fd_.get(), record, data_file(dir_));
    if (sync_)
        ::fdatasync(data_fd_.get());
    Encoder e;
    e.u64(data_size_);
    write_all(index_fd_.get(), e.data(), index_file(dir_));
    if (sync_)
        ::fdatasync(index_fd_.get());
    data_size_ += record.size();
}

} // namespace civic
