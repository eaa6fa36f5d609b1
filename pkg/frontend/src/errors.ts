/** Typed errors, mirrored on the exit-code classes the CLI reports. */

/** Malformed or unreadable artifact: bad bytes, bad JSON, bad CSV. */
export class DumpFormatError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "DumpFormatError";
  }
}

/** Structurally valid inputs that do not fit together, or a model shape
 * this bridge refuses to guess about. */
export class BridgeContractError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "BridgeContractError";
  }
}
