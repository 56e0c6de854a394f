"""Network front door for a simulation session.

One asyncio server exposes one Session over newline-delimited text.
Clients may speak either raw TCP or WebSocket on the same port: the
first line of a connection is sniffed, and an HTTP GET starts an
RFC 6455 upgrade handshake (text frames, one protocol line per frame)
while anything else is treated as a raw protocol line. The client
always speaks first (raw clients send their first line, WebSocket
clients their handshake); the server then attaches and answers with a
``CFG`` line before reacting to anything else.

Only one client may be attached at a time; extra connections receive
``ERR busy`` and are closed. The session outlives connections, so a
dropped console can reconnect and find the rig where it left it.

Two clocks are supported. In the default sim-time mode the session only
advances when the client sends ``SYN <t_ms>``; the server runs every
control tick strictly before t_ms, sends the telemetry that produced,
and answers ``ACK <t_ms>``. This lockstep makes a networked run
tick-for-tick identical to an in-process scripted run. With
realtime=True the server free-runs the session on the wall clock and
pushes telemetry as it appears; SYN is refused in that mode.
"""

from __future__ import annotations

import asyncio
import base64
import hashlib

from .protocol import (Ack, Command, ConfigInfo, ErrorMsg, ProtocolError, Syn,
                       decode_client_line, encode_ack, encode_config_info,
                       encode_error, encode_telemetry)
from .session import Session, save_trace

_WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"


class _RawStream:
    """Newline-delimited text over plain TCP."""

    def __init__(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter):
        self.reader = reader
        self.writer = writer

    async def recv_line(self) -> str | None:
        try:
            raw = await self.reader.readline()
        except (ValueError, ConnectionError):
            return None
        if not raw:
            return None
        return raw.decode("utf-8", errors="replace").rstrip("\r\n")

    async def send_line(self, line: str) -> None:
        self.writer.write(line.encode("utf-8") + b"\n")
        await self.writer.drain()

    async def close(self) -> None:
        try:
            self.writer.close()
            await self.writer.wait_closed()
        except (ConnectionError, OSError):
            pass


class _WebSocketStream:
    """Minimal RFC 6455 endpoint: text frames carry one line each."""

    def __init__(self, reader: asyncio.StreamReader, writer: asyncio.StreamWriter):
        self.reader = reader
        self.writer = writer

    async def _read_frame(self) -> tuple[int, bytes, bool] | None:
        try:
            head = await self.reader.readexactly(2)
            opcode = head[0] & 0x0F
            fin = bool(head[0] & 0x80)
            masked = bool(head[1] & 0x80)
            length = head[1] & 0x7F
            if length == 126:
                length = int.from_bytes(await self.reader.readexactly(2), "big")
            elif length == 127:
                length = int.from_bytes(await self.reader.readexactly(8), "big")
            mask = await self.reader.readexactly(4) if masked else None
            payload = await self.reader.readexactly(length) if length else b""
        except (asyncio.IncompleteReadError, ConnectionError):
            return None
        if mask:
            payload = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
        return opcode, payload, fin

    async def recv_line(self) -> str | None:
        fragments: list[bytes] = []
        while True:
            frame = await self._read_frame()
            if frame is None:
                return None
            opcode, payload, fin = frame
            if opcode == 0x8:  # close
                await self._send_raw(0x8, payload[:2])
                return None
            if opcode == 0x9:  # ping
                await self._send_raw(0xA, payload)
                continue
            if opcode == 0xA:  # unsolicited pong
                continue
            fragments.append(payload)
            if fin:
                text = b"".join(fragments).decode("utf-8", errors="replace")
                return text.rstrip("\r\n")
            # fin=0: continuation frames follow, keep accumulating

    async def _send_raw(self, opcode: int, payload: bytes) -> None:
        n = len(payload)
        if n < 126:
            head = bytes([0x80 | opcode, n])
        elif n < 1 << 16:
            head = bytes([0x80 | opcode, 126]) + n.to_bytes(2, "big")
        else:
            head = bytes([0x80 | opcode, 127]) + n.to_bytes(8, "big")
        self.writer.write(head + payload)
        await self.writer.drain()

    async def send_line(self, line: str) -> None:
        await self._send_raw(0x1, line.encode("utf-8"))

    async def close(self) -> None:
        try:
            await self._send_raw(0x8, b"")
        except (ConnectionError, OSError):
            pass
        try:
            self.writer.close()
            await self.writer.wait_closed()
        except (ConnectionError, OSError):
            pass


async def _ws_handshake(reader: asyncio.StreamReader,
                        writer: asyncio.StreamWriter) -> _WebSocketStream | None:
    headers: dict[str, str] = {}
    while True:
        raw = await reader.readline()
        if raw in (b"", b"\r\n", b"\n"):
            break
        name, _, value = raw.decode("latin-1").partition(":")
        headers[name.strip().lower()] = value.strip()
    key = headers.get("sec-websocket-key")
    if not key or "websocket" not in headers.get("upgrade", "").lower():
        writer.write(b"HTTP/1.1 400 Bad Request\r\n\r\n")
        await writer.drain()
        return None
    digest = hashlib.sha1((key + _WS_GUID).encode("ascii")).digest()
    accept = base64.b64encode(digest).decode("ascii")
    writer.write(
        b"HTTP/1.1 101 Switching Protocols\r\n"
        b"Upgrade: websocket\r\n"
        b"Connection: Upgrade\r\n"
        b"Sec-WebSocket-Accept: " + accept.encode("ascii") + b"\r\n\r\n"
    )
    await writer.drain()
    return _WebSocketStream(reader, writer)


class RobotServer:
    def __init__(self, session: Session, realtime: bool = False,
                 trace_path: str | None = None):
        self.session = session
        self.realtime = realtime
        self.trace_path = trace_path
        self.port: int | None = None
        self._server: asyncio.AbstractServer | None = None
        self._client: _RawStream | _WebSocketStream | None = None
        self._ticker: asyncio.Task | None = None

    # -- lifecycle -------------------------------------------------------

    async def start(self, host: str = "127.0.0.1", port: int = 0) -> None:
        self._server = await asyncio.start_server(self._handle, host, port)
        self.port = self._server.sockets[0].getsockname()[1]
        if self.realtime:
            self._ticker = asyncio.create_task(self._tick_loop())

    async def stop(self) -> None:
        if self._ticker is not None:
            self._ticker.cancel()
            try:
                await self._ticker
            except asyncio.CancelledError:
                pass
            self._ticker = None
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()
            self._server = None
        self._flush_trace()

    async def serve_forever(self) -> None:
        assert self._server is not None
        await self._server.serve_forever()

    def _flush_trace(self) -> None:
        if self.trace_path and self.session.trace:
            save_trace(self.session.trace, self.trace_path)

    # -- realtime clock ----------------------------------------------------

    async def _tick_loop(self) -> None:
        loop = asyncio.get_running_loop()
        dt = self.session.tick_ms / 1000.0
        t0 = loop.time()
        n = 0
        while True:
            n += 1
            delay = t0 + n * dt - loop.time()
            if delay > 0:
                await asyncio.sleep(delay)
            self.session.tick()
            await self._push_telemetry()

    async def _push_telemetry(self) -> None:
        frames = self.session.drain_telemetry()
        client = self._client
        if client is None:
            return
        try:
            for frame in frames:
                await client.send_line(encode_telemetry(frame))
        except (ConnectionError, OSError):
            pass  # reader side will notice the drop

    # -- connections -------------------------------------------------------

    async def _handle(self, reader: asyncio.StreamReader,
                      writer: asyncio.StreamWriter) -> None:
        try:
            first = await reader.readline()
        except (ValueError, ConnectionError):
            writer.close()
            return
        if not first:
            writer.close()
            return

        first_text = first.decode("utf-8", errors="replace").rstrip("\r\n")
        stream: _RawStream | _WebSocketStream | None
        leftover: str | None
        if first_text.startswith("GET "):
            stream = await _ws_handshake(reader, writer)
            if stream is None:
                writer.close()
                return
            leftover = None
        else:
            stream = _RawStream(reader, writer)
            leftover = first_text

        if self._client is not None:
            await stream.send_line(encode_error(ErrorMsg("busy", "another console is attached")))
            await stream.close()
            return

        self._client = stream
        try:
            cfg = self.session.config
            await stream.send_line(encode_config_info(ConfigInfo(
                working_range_max_n=cfg.safety.working_range_max_n,
                payload_limit_n=cfg.motion.payload_limit_n,
            )))
            if leftover:
                await self._process(stream, leftover)
            while True:
                line = await stream.recv_line()
                if line is None:
                    break
                if not line.strip():
                    continue
                await self._process(stream, line)
        finally:
            self._client = None
            await stream.close()
            self._flush_trace()

    async def _process(self, stream: _RawStream | _WebSocketStream, line: str) -> None:
        try:
            msg = decode_client_line(line)
        except ProtocolError as exc:
            await stream.send_line(encode_error(ErrorMsg("bad_command", str(exc))))
            return
        if isinstance(msg, Command):
            self.session.submit(msg)
            return
        assert isinstance(msg, Syn)
        if self.realtime:
            await stream.send_line(encode_error(
                ErrorMsg("mode", "lockstep disabled while the wall clock drives the session")))
            return
        self.session.advance_to(msg.t_ms)
        for frame in self.session.drain_telemetry():
            await stream.send_line(encode_telemetry(frame))
        await stream.send_line(encode_ack(Ack(msg.t_ms)))
