export class SchemaMismatchError extends Error {
    constructor(message: string) {
        super(message);
        this.name = 'SchemaMismatchError';
    }
}

export class IoFailureError extends Error {
    constructor(message: string) {
        super(message);
        this.name = 'IoFailureError';
    }
}
