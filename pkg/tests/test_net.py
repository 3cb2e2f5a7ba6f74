import socket

import numpy as np
import pytest

from codepir import net
from codepir.framework import Database, gen_query
from codepir.schemes import make_amg, make_basic, make_hhwz, make_rlwe
from codepir.wire import (
    Kind,
    decode_frame,
    encode_frame,
    encode_message,
    query_message,
    read_frame,
)

CASES = [(make_basic, 50), (make_hhwz, 30), (make_amg, 8), (make_rlwe, 16)]


@pytest.fixture
def served():
    servers = []

    def start(scheme, files, parallel=False):
        server, _ = net.start_background(scheme, Database.flat(scheme, files), parallel=parallel)
        servers.append(server)
        return server.server_address

    yield start
    for s in servers:
        net.shutdown(s)


@pytest.mark.parametrize("factory,N", CASES, ids=["basic", "hhwz", "amg", "rlwe"])
def test_loopback(served, factory, N):
    scheme = factory()
    rng = np.random.default_rng(5)
    files = scheme.sample_x(rng, (N,))
    addr = served(scheme, files)
    for b in (1, N):
        got, _ = net.fetch(addr, scheme, N, b, rng)
        assert np.array_equal(got, files[b - 1])


def test_size_mismatch_gives_error_frame(served):
    scheme = make_basic()
    rng = np.random.default_rng(6)
    addr = served(scheme, scheme.sample_x(rng, (50,)))
    query, _ = gen_query(scheme, 40, 1, rng)
    with socket.create_connection(addr) as sock:
        sock.sendall(encode_message(query))
        sock.shutdown(socket.SHUT_WR)
        with sock.makefile("rb") as stream:
            msg = read_frame(stream)
    assert msg.kind is Kind.ERROR and b"40" in msg.body


def test_remote_error_raised(served):
    scheme = make_basic()
    rng = np.random.default_rng(7)
    addr = served(scheme, scheme.sample_x(rng, (50,)))
    with pytest.raises(net.RemoteError):
        net.fetch(addr, scheme, 49, 1, rng)


def test_wrong_scheme_rejected():
    basic, amg = make_basic(), make_amg()
    db = Database.flat(basic, basic.sample_x(np.random.default_rng(0), (8,)))
    query, _ = gen_query(amg, 8, 1, np.random.default_rng(1))
    answer = decode_frame(net.answer(basic, db, query_message(query)))
    assert answer.kind is Kind.ERROR


def test_garbage_frame(served):
    scheme = make_basic()
    addr = served(scheme, scheme.sample_x(np.random.default_rng(8), (50,)))
    with socket.create_connection(addr) as sock:
        sock.sendall(b"XPIR" + bytes(11))
        sock.shutdown(socket.SHUT_WR)
        with sock.makefile("rb") as stream:
            assert read_frame(stream).kind is Kind.ERROR


def test_parallel_server(served):
    scheme = make_amg()
    rng = np.random.default_rng(9)
    files = scheme.sample_x(rng, (8,))
    addr = served(scheme, files, parallel=True)
    for b in range(1, 9):
        got, _ = net.fetch(addr, scheme, 8, b, rng)
        assert int(got) == int(files[b - 1])


def test_distinct_seeds_give_distinct_queries(served):
    scheme = make_basic()
    addr = served(scheme, scheme.sample_x(np.random.default_rng(10), (50,)))
    frames = set()
    for seed in range(10):
        _, query = net.fetch(addr, scheme, 50, 3, np.random.default_rng(seed))
        frames.add(encode_frame(query_message(query)))
    assert len(frames) == 10


def test_parse_addr():
    assert net.parse_addr("localhost:80") == ("localhost", 80)
    assert net.parse_addr(":9000") == ("127.0.0.1", 9000)
    with pytest.raises(ValueError):
        net.parse_addr("nope")
