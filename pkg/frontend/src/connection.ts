// WebSocket client: request/ack correlation, automatic reconnect with
// resubscribe, and a single onMessage fan-out. The socket constructor is
// injectable so tests drive the client with a scripted fake.

import type { ClientMessage, ServerMessage } from "./protocol.js";
import { messages } from "./protocol.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  // eslint-style note: `any` mirrors the DOM WebSocket handler signatures so
  // a real WebSocket satisfies this interface structurally
  onopen: ((ev?: any) => void) | null;
  onclose: ((ev?: any) => void) | null;
  onmessage: ((ev: any) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

interface Pending {
  resolve: (message: ServerMessage) => void;
  reject: (error: Error) => void;
}

export class Connection {
  private socket: SocketLike | null = null;
  private nextRequest = 1;
  private pending = new Map<string, Pending>();
  private subscriptions = new Map<number, number>(); // instance id -> rate
  private reconnectDelay = 500;
  private closedByUser = false;

  onMessage: (message: ServerMessage) => void = () => {};
  onStatus: (connected: boolean) => void = () => {};

  constructor(private url: string, private factory: SocketFactory) {}

  connect(): void {
    this.closedByUser = false;
    const socket = this.factory(this.url);
    this.socket = socket;
    socket.onopen = () => {
      this.reconnectDelay = 500;
      this.onStatus(true);
      // restore streams after a drop; the server sends a fresh catalog first
      for (const [instanceId, rate] of this.subscriptions) {
        this.fire(messages.subscribe(instanceId, rate));
      }
    };
    socket.onmessage = (ev) => {
      let message: ServerMessage;
      try {
        message = JSON.parse(ev.data) as ServerMessage;
      } catch {
        return;
      }
      const requestId = (message as { request_id?: string }).request_id;
      if (requestId && this.pending.has(requestId)) {
        const waiter = this.pending.get(requestId)!;
        this.pending.delete(requestId);
        waiter.resolve(message);
      }
      this.onMessage(message);
    };
    socket.onclose = () => {
      this.onStatus(false);
      for (const waiter of this.pending.values()) {
        waiter.reject(new Error("connection lost"));
      }
      this.pending.clear();
      if (!this.closedByUser) {
        setTimeout(() => this.connect(), this.reconnectDelay);
        this.reconnectDelay = Math.min(this.reconnectDelay * 2, 10_000);
      }
    };
  }

  close(): void {
    this.closedByUser = true;
    this.socket?.close();
  }

  // fire-and-forget send (drag streams, best-effort commands)
  fire(message: ClientMessage): void {
    this.socket?.send(JSON.stringify(message));
  }

  // send with a request id; resolves with the matching ack or error
  request(message: ClientMessage): Promise<ServerMessage> {
    const requestId = `r${this.nextRequest++}`;
    const tagged = { ...message, request_id: requestId };
    return new Promise((resolve, reject) => {
      this.pending.set(requestId, { resolve, reject });
      try {
        this.socket?.send(JSON.stringify(tagged));
      } catch (error) {
        this.pending.delete(requestId);
        reject(error as Error);
      }
    });
  }

  subscribe(instanceId: number, rateHz = 30): void {
    this.subscriptions.set(instanceId, rateHz);
    this.fire(messages.subscribe(instanceId, rateHz));
  }

  unsubscribe(instanceId: number): void {
    this.subscriptions.delete(instanceId);
    this.fire(messages.unsubscribe(instanceId));
  }
}
