/** Non-blocking toast queue; rejected-event reasons from the server land here. */

export interface Toast {
  id: number;
  message: string;
}

export class ToastQueue {
  toasts: Toast[] = [];
  private nextId = 1;

  constructor(
    private readonly onChange: (toasts: Toast[]) => void = () => {},
    private readonly ttlMs = 4000,
    private readonly schedule: (fn: () => void, ms: number) => void =
      (fn, ms) => void setTimeout(fn, ms),
  ) {}

  push(message: string): Toast {
    const toast = { id: this.nextId++, message };
    this.toasts = [...this.toasts, toast];
    this.onChange(this.toasts);
    this.schedule(() => this.dismiss(toast.id), this.ttlMs);
    return toast;
  }

  dismiss(id: number): void {
    const before = this.toasts.length;
    this.toasts = this.toasts.filter((t) => t.id !== id);
    if (this.toasts.length !== before) this.onChange(this.toasts);
  }
}
