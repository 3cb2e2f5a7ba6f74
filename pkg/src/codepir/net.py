"""Framed TCP transport: one request per connection.

The server holds only the scheme description and the database.  It decodes
Query frames, checks their shape, runs ``gen_reply`` and answers with a
Reply frame, or an Error frame when the query does not fit the database.
"""

from __future__ import annotations

import logging
import socket
import socketserver
import threading
from typing import Optional

import numpy as np

from .framework import Database, Query, Reply, Scheme, extract, gen_query, gen_reply
from .wire import (
    Kind,
    WireError,
    encode_frame,
    error_message,
    query_message,
    read_frame,
    reply_message,
    unpack_message,
)

log = logging.getLogger(__name__)


class RemoteError(RuntimeError):
    """The server answered with an Error frame."""


def parse_addr(addr: str) -> tuple[str, int]:
    host, sep, port = addr.rpartition(":")
    if not sep or not port.isdigit():
        raise ValueError(f"address must look like HOST:PORT, got {addr!r}")
    return host or "127.0.0.1", int(port)


def answer(scheme: Scheme, db: Database, msg) -> bytes:
    """Server-side handling of one decoded frame; returns the framed answer."""
    sid = scheme.scheme_id
    if msg.kind is not Kind.QUERY:
        return encode_frame(error_message(sid, f"expected a query, got {msg.kind.name.lower()}"))
    if msg.scheme_id != sid:
        return encode_frame(error_message(sid, f"server runs scheme {int(sid)}, "
                                               f"query is for {int(msg.scheme_id)}"))
    try:
        query = unpack_message(msg)
    except WireError as exc:
        return encode_frame(error_message(sid, f"malformed query: {exc}"))
    if query.ctx != scheme.ctx:
        return encode_frame(error_message(sid, "query ring does not match the database ring"))
    if query.size != db.query_size:
        return encode_frame(error_message(
            sid, f"query has {query.size} elements, database holds {db.query_size}"))
    if query.vectors.shape[1] != scheme.query_width:
        return encode_frame(error_message(
            sid, f"query width {query.vectors.shape[1]} != {scheme.query_width}"))
    return encode_frame(reply_message(gen_reply(query, db)))


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        scheme, db = self.server.scheme, self.server.db
        try:
            msg = read_frame(self.rfile)
        except WireError as exc:
            log.info("rejecting frame from %s: %s", self.client_address, exc)
            self.wfile.write(encode_frame(error_message(scheme.scheme_id, str(exc))))
            return
        self.wfile.write(answer(scheme, db, msg))


class PirServer(socketserver.TCPServer):
    allow_reuse_address = True

    def __init__(self, addr: tuple[str, int], scheme: Scheme, db: Database):
        self.scheme = scheme
        self.db = db
        super().__init__(addr, _Handler)


class ThreadedPirServer(socketserver.ThreadingMixIn, PirServer):
    daemon_threads = True


def make_server(addr: tuple[str, int], scheme: Scheme, db: Database,
                parallel: bool = False) -> PirServer:
    cls = ThreadedPirServer if parallel else PirServer
    return cls(addr, scheme, db)


def start_background(scheme: Scheme, db: Database, host: str = "127.0.0.1", port: int = 0,
                     parallel: bool = False) -> tuple[PirServer, threading.Thread]:
    """Serve on a daemon thread; ``port=0`` picks a free port (see ``server.server_address``)."""
    server = make_server((host, port), scheme, db, parallel)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    return server, thread


def exchange(addr: tuple[str, int], frame: bytes, timeout: float = 30.0):
    with socket.create_connection(addr, timeout=timeout) as sock:
        sock.sendall(frame)
        sock.shutdown(socket.SHUT_WR)
        with sock.makefile("rb") as stream:
            msg = read_frame(stream)
    if msg.kind is Kind.ERROR:
        raise RemoteError(msg.body.decode("utf-8", "replace"))
    return unpack_message(msg)


def fetch(addr: tuple[str, int], scheme: Scheme, N: int, b: int, rng: np.random.Generator,
          timeout: float = 30.0) -> tuple[np.ndarray, Query]:
    """Retrieve file ``b`` (1-based) from a flat database of N files."""
    query, secret = gen_query(scheme, N, b, rng)
    reply = exchange(addr, encode_frame(query_message(query)), timeout)
    if not isinstance(reply, Reply):
        raise WireError("server answered with a non-reply frame")
    return extract(scheme, secret, reply), query


def shutdown(server: Optional[PirServer]) -> None:
    if server is not None:
        server.shutdown()
        server.server_close()
