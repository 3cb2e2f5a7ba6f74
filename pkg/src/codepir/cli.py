"""Command line: ``codepir {demo,serve,fetch,attack,bench,gendb} ...``.

Randomness comes from numpy's PCG64 generator.  A run with ``--seed S``
splits ``SeedSequence(S)`` into two streams: the first fills the database,
the second drives the client.  ``gendb``, ``demo`` and ``fetch`` therefore
agree on the database for the same seed and scheme flags.
"""

from __future__ import annotations

import argparse
import json
import logging
import struct
import sys
import time
from typing import Optional, Sequence

import numpy as np

from . import net
from .algebra import ContextError
from .attacks import (
    QueryMatrix,
    amg_lattice_attack,
    rank_drop_attack,
    unit_vector_attack,
)
from .bench import measure
from .framework import (
    Database,
    ParameterError,
    RecoveryError,
    SchemeId,
    comm_cost,
    extract,
    gen_query,
    gen_reply,
)
from .schemes import SCHEME_NAMES, make_scheme
from .wire import (
    WireError,
    encode_db,
    decode_db,
    encode_residues,
    read_transcript,
    write_transcript,
)

DEFAULT_N = {"basic": 50, "hhwz": 30, "amg": 8, "rlwe": 16}
EXIT_FAIL = 1
EXIT_USAGE = 2

log = logging.getLogger("codepir")


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"{text} is not an unsigned 64-bit value")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"{text} must be at least 1")
    return value


def _streams(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    db_seq, client_seq = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(db_seq), np.random.default_rng(client_seq)


def build_scheme(args, N: Optional[int] = None):
    """Scheme from the parameter flags; unset flags keep the scheme defaults."""
    name = args.scheme
    N = N or args.N or DEFAULT_N[name]
    if name == "basic":
        kw = {"q": args.q, "n": args.n, "k": args.k}
    elif name == "hhwz":
        kw = {"q": args.q, "m": args.m, "n": args.n, "k": args.k, "s": args.s}
    elif name == "amg":
        kw = {"N": N, "n": args.n, "k": args.k, "p": args.p}
    else:
        kw = {"n": args.deg, "q": args.rq, "t": args.t, "sigma": args.sigma, "N": N}
    kw = {k: v for k, v in kw.items() if v is not None}
    return make_scheme(name, **kw)


def _add_scheme_flags(p: argparse.ArgumentParser, with_b: bool = True,
                      many_N: bool = False) -> None:
    g = p.add_argument_group("scheme parameters")
    g.add_argument("--scheme", choices=sorted(DEFAULT_N), default="basic")
    g.add_argument("--seed", type=_u64, default=0, help="64-bit seed")
    if many_N:
        g.add_argument("--N", type=_positive, nargs="+", help="stored element counts")
    else:
        g.add_argument("--N", type=_positive, help="database size (files)")
    if with_b:
        g.add_argument("--b", type=int, help="1-based index to retrieve (default: random)")
    g.add_argument("--q", type=int, help="field characteristic (basic, hhwz)")
    g.add_argument("--n", type=int, help="code length (basic, hhwz, amg)")
    g.add_argument("--k", type=int, help="code dimension (basic, hhwz, amg)")
    g.add_argument("--m", type=int, help="extension degree (hhwz)")
    g.add_argument("--s", type=int, help="dimension of V (hhwz)")
    g.add_argument("--p", type=int, help="prime above 2^(3l+1) (amg)")
    g.add_argument("--t", type=int, help="plaintext modulus (rlwe)")
    g.add_argument("--sigma", type=float, help="error width (rlwe)")
    g.add_argument("--rq", type=int, help="ciphertext modulus (rlwe)")
    g.add_argument("--deg", type=int, help="ring degree, a power of two (rlwe)")


def _pick_b(args, N: int, rng: np.random.Generator) -> int:
    if args.b is None:
        return int(rng.integers(1, N + 1))
    if not 1 <= args.b <= N:
        raise ParameterError(f"--b {args.b} outside [1, {N}]")
    return args.b


def _show(x) -> str:
    return json.dumps(np.asarray(x).tolist() if np.ndim(x) else int(x))


# ---------------------------------------------------------------------------
# verbs


def cmd_demo(args) -> int:
    scheme = build_scheme(args)
    N = args.N or DEFAULT_N[args.scheme]
    db_rng, rng = _streams(args.seed)
    b = _pick_b(args, N, rng)
    files = scheme.sample_x(db_rng, (N,))
    db = Database.flat(scheme, files)
    start = time.perf_counter()
    query, secret = gen_query(scheme, N, b, rng)
    t_query = time.perf_counter()
    reply = gen_reply(query, db)
    t_reply = time.perf_counter()
    got = extract(scheme, secret, reply)
    t_done = time.perf_counter()
    if args.transcript:
        write_transcript(args.transcript, scheme, query)
    ok = scheme.ctx.equal(got, files[b - 1])
    cost = comm_cost(scheme, N)
    print(f"scheme: {scheme!r}")
    print(f"N={N} b={b} seed={args.seed}")
    print(f"retrieved: {_show(got)}")
    print(f"expected:  {_show(files[b - 1])}")
    print(f"uplink {cost.uplink_bytes} B (+{cost.uplink_header_bytes} B header), "
          f"downlink {cost.downlink_bytes} B (+{cost.downlink_header_bytes} B header)")
    print(f"time: query {1e3 * (t_query - start):.2f} ms, reply {1e3 * (t_reply - t_query):.2f} ms, "
          f"extract {1e3 * (t_done - t_reply):.2f} ms")
    print("ok" if ok else "MISMATCH")
    return 0 if ok else EXIT_FAIL


def cmd_gendb(args) -> int:
    scheme = build_scheme(args)
    N = args.N or DEFAULT_N[args.scheme]
    db_rng, _ = _streams(args.seed)
    files = scheme.sample_x(db_rng, (N,))
    with open(args.out, "wb") as fh:
        fh.write(encode_db(scheme, files))
    print(f"wrote {N} files for {scheme.name} to {args.out}")
    return 0


def _load_db(args):
    with open(args.db, "rb") as fh:
        data = fh.read()
    if len(data) < 14:
        raise WireError("database file is truncated")
    sid = data[5]
    if sid != int(SchemeId[args.scheme.upper()]):
        raise WireError(f"database is for scheme id {sid}, --scheme is {args.scheme}")
    N = struct.unpack_from("<Q", data, 6)[0]
    if args.N is not None and args.N != N:
        raise ParameterError(f"--N {args.N} but the database holds {N} files")
    scheme = build_scheme(args, N)
    _, files = decode_db(data, scheme.ctx)
    return scheme, Database.flat(scheme, files)


def cmd_serve(args) -> int:
    scheme, db = _load_db(args)
    host, port = net.parse_addr(args.addr)
    server = net.make_server((host, port), scheme, db, parallel=args.parallel)
    h, p = server.server_address[:2]
    print(f"serving {scheme.name} N={db.query_size} on {h}:{p}", flush=True)
    try:
        if args.max_requests:
            for _ in range(args.max_requests):
                server.handle_request()
        else:
            server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


def cmd_fetch(args) -> int:
    if args.N is None:
        raise ParameterError("fetch needs --N (the server's database size)")
    scheme = build_scheme(args)
    _, rng = _streams(args.seed)
    b = _pick_b(args, args.N, rng)
    addr = net.parse_addr(args.addr)
    got, query = net.fetch(addr, scheme, args.N, b, rng, timeout=args.timeout)
    if args.transcript:
        write_transcript(args.transcript, scheme, query)
    if args.out:
        with open(args.out, "wb") as fh:
            fh.write(encode_residues(scheme.ctx, got))
    print(f"b={b} retrieved: {_show(got)}")
    return 0


def cmd_attack(args) -> int:
    tr = read_transcript(args.transcript)
    name = SCHEME_NAMES[tr.scheme_id]
    qm = QueryMatrix(tr.ctx, tr.vectors)
    notes = []
    if args.strategy == "lattice":
        if name != "amg":
            raise ContextError(f"lattice strategy targets amg transcripts, got {name}")
        t = args.t or tr.params["t"]
        k = tr.params.get("k") if args.k is None else args.k
        report = amg_lattice_attack(qm, t, args.block, k=k)
    else:
        if not qm.ctx.is_field:
            qm = qm.field_view()
            notes.append(f"{name} queries read as coefficient rows over F_{qm.ctx.p}")
        if name == "rlwe":
            notes.append("no gap expected: rlwe queries carry no planted field structure")
        if args.strategy == "unitvec":
            report = unit_vector_attack(qm)
        else:
            report = rank_drop_attack(qm, s=tr.params.get("s"))
    report.notes[:0] = notes
    print(f"transcript: {args.transcript} ({name}, N={qm.N})")
    print(report.table())
    if report.phases:
        print("phase 1 block statistics:", [round(x, 3) for x in report.phases["block_stats"]])
        print("phase 1 candidate blocks:", report.phases["candidate_blocks"])
        print("phase 2 position statistics:", report.phases["position_stats"])
    return 0 if report.guess is not None else EXIT_FAIL


def cmd_bench(args) -> int:
    _, rng = _streams(args.seed)
    Ns = args.N or [16, 64, 256]
    print(f"{'N':>6} {'setup':>6} {'L':>3} {'uplink':>9} {'downlink':>9} {'total':>9} "
          f"{'headers':>8} {'server_ms':>10} ok")
    status = 0
    for N in Ns:
        for setup in args.setup:
            try:
                row = measure(lambda size: build_scheme(args, size), N, setup, rng, args.L)
            except ParameterError as exc:
                print(f"{N:>6} {setup:>6} {args.L if setup == 'iter' else 1:>3}  skipped: {exc}")
                continue
            status |= 0 if row.ok else EXIT_FAIL
            L = row.L if setup == "iter" else 1
            print(f"{N:>6} {setup:>6} {L:>3} {row.uplink_bytes:>9} {row.downlink_bytes:>9} "
                  f"{row.total_bytes:>9} {row.header_bytes:>8} {1e3 * row.server_seconds:>10.3f} "
                  f"{'yes' if row.ok else 'NO'}")
    return status


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="codepir",
                                     description="Code-based single-server PIR toolkit.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("demo", help="run one in-process retrieval round")
    _add_scheme_flags(p)
    p.add_argument("--transcript", help="write the query transcript here")
    p.set_defaults(func=cmd_demo)

    p = sub.add_parser("gendb", help="write a seeded random database file")
    _add_scheme_flags(p, with_b=False)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gendb)

    p = sub.add_parser("serve", help="answer framed queries over TCP")
    _add_scheme_flags(p, with_b=False)
    p.add_argument("--db", required=True, help="database file (CPDB)")
    p.add_argument("--addr", default="127.0.0.1:7700")
    p.add_argument("--parallel", action="store_true", help="one thread per connection")
    p.add_argument("--max-requests", type=int, default=0,
                   help="exit after this many connections (0: run until interrupted)")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("fetch", help="retrieve one file from a server")
    _add_scheme_flags(p)
    p.add_argument("--addr", default="127.0.0.1:7700")
    p.add_argument("--out", help="write the retrieved element (u64 LE residues)")
    p.add_argument("--transcript", help="write the query transcript here")
    p.add_argument("--timeout", type=float, default=30.0)
    p.set_defaults(func=cmd_fetch)

    p = sub.add_parser("attack", help="try to recover b from a transcript")
    p.add_argument("--transcript", required=True)
    p.add_argument("--strategy", choices=["unitvec", "rank", "lattice"], required=True)
    p.add_argument("--block", type=int, default=4, help="rows per block (lattice)")
    p.add_argument("--t", type=int, help="override t (lattice)")
    p.add_argument("--k", type=int, help="override the code dimension (lattice)")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("bench", help="communication and server time per setup")
    _add_scheme_flags(p, with_b=False, many_N=True)
    p.add_argument("--setup", nargs="+", choices=["flat", "matrix", "iter"],
                   default=["flat", "matrix", "iter"])
    p.add_argument("--L", type=_positive, default=4, help="chunks per file for iter")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ParameterError, ContextError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (WireError, RecoveryError, net.RemoteError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
