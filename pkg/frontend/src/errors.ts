/** Error taxonomy matching the backend module error names. */

export class ToolError extends Error {
  constructor(message: string) {
    super(message);
    this.name = new.target.name;
  }
}

export class BadParams extends ToolError {}
export class OutOfBounds extends ToolError {}
export class TooFewVertices extends ToolError {}
export class ParseError extends ToolError {}
export class NoHit extends ToolError {}

export class InvalidAction extends ToolError {
  seq: number | null;

  constructor(message: string, seq: number | null = null) {
    super(message);
    this.seq = seq;
  }
}

export class HeaderMismatch extends ToolError {}

/** Raised when a gateway response is an error document. */
export class GatewayError extends ToolError {
  status: number;
  error: string;

  constructor(status: number, error: string, detail: string) {
    super(`${error}: ${detail}`);
    this.status = status;
    this.error = error;
  }
}
