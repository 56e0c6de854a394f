/** Scriptable stand-in for a WebSocket, playing the service side in tests. */

import type { SocketLike } from "../src/controller.js";

export class MockSocket implements SocketLike {
  static instances: MockSocket[] = [];

  readonly sent: string[] = [];
  closed = false;
  onopen: (() => void) | null = null;
  onmessage: ((event: { data: unknown }) => void) | null = null;
  onclose: (() => void) | null = null;
  onerror: (() => void) | null = null;

  constructor(readonly url: string) {
    MockSocket.instances.push(this);
  }

  static reset(): void {
    MockSocket.instances = [];
  }

  static latest(): MockSocket {
    const sock = MockSocket.instances[MockSocket.instances.length - 1];
    if (sock === undefined) {
      throw new Error("no socket created yet");
    }
    return sock;
  }

  static factory(url: string): MockSocket {
    return new MockSocket(url);
  }

  send(data: string): void {
    if (this.closed) {
      throw new Error("send after close");
    }
    this.sent.push(String(data));
  }

  close(): void {
    if (!this.closed) {
      this.closed = true;
      this.onclose?.();
    }
  }

  /** Server accepted the connection. */
  open(): void {
    this.onopen?.();
  }

  /** Deliver one server line (or several separated by newlines). */
  receive(data: string): void {
    this.onmessage?.({ data });
  }

  /** Server dropped the connection. */
  drop(): void {
    this.closed = true;
    this.onclose?.();
  }
}
