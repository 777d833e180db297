import type { PatientRecord, SchemaField } from "./api";

// Patient entry form generated from the served schema, one row per field, in
// schema order. Nothing here is hand-coded per complaint: the same form logic
// serves whatever artifact the service is holding.

interface FieldRow {
  field: SchemaField;
  input: HTMLInputElement | HTMLSelectElement;
  error: HTMLElement;
}

const NOT_RECORDED = "(not recorded)";

/** Trim a stat to something typeable without losing the round trip. */
function displayNumber(value: number): string {
  if (Number.isInteger(value)) return String(value);
  return String(Number(value.toPrecision(6)));
}

export class PatientForm {
  private readonly rows = new Map<string, FieldRow>();

  constructor(container: HTMLElement, fields: SchemaField[]) {
    const doc = container.ownerDocument;
    for (const field of fields) {
      const row = doc.createElement("div");
      row.className = "field-row";

      const label = doc.createElement("label");
      label.textContent = field.name;
      label.htmlFor = `field-${field.name}`;
      row.appendChild(label);

      let input: HTMLInputElement | HTMLSelectElement;
      if (field.kind === "categorical") {
        const select = doc.createElement("select");
        const blank = doc.createElement("option");
        blank.value = "";
        blank.textContent = NOT_RECORDED;
        select.appendChild(blank);
        for (const value of field.values) {
          const option = doc.createElement("option");
          option.value = value;
          option.textContent = value;
          select.appendChild(option);
        }
        input = select;
      } else if (field.kind === "binary-flag") {
        const box = doc.createElement("input");
        box.type = "checkbox";
        box.checked = field.typical >= 0.5;
        input = box;
      } else {
        const num = doc.createElement("input");
        num.type = "number";
        num.step = "any";
        num.value = displayNumber(field.typical);
        num.placeholder = `${displayNumber(field.minimum)} to ${displayNumber(field.maximum)}`;
        num.title = `training range ${displayNumber(field.minimum)} to ${displayNumber(field.maximum)}`;
        input = num;
      }
      input.id = `field-${field.name}`;
      input.setAttribute("name", field.name);
      row.appendChild(input);

      const error = doc.createElement("span");
      error.className = "field-error";
      row.appendChild(error);

      container.appendChild(row);
      this.rows.set(field.name, { field, input, error });
    }
  }

  get fieldNames(): string[] {
    return [...this.rows.keys()];
  }

  /** Current values, typed the way the service expects them. */
  read(): PatientRecord {
    const record: PatientRecord = {};
    for (const [name, row] of this.rows) {
      if (row.field.kind === "binary-flag") {
        record[name] = (row.input as HTMLInputElement).checked ? 1 : 0;
      } else if (row.field.kind === "categorical") {
        record[name] = row.input.value === "" ? null : row.input.value;
      } else {
        const raw = row.input.value.trim();
        record[name] = raw === "" ? null : Number(raw);
      }
    }
    return record;
  }

  setValue(name: string, value: number | string | boolean | null): void {
    const row = this.rows.get(name);
    if (!row) throw new Error(`no such field: ${name}`);
    if (row.field.kind === "binary-flag") {
      (row.input as HTMLInputElement).checked = value === 1 || value === true;
    } else if (value === null) {
      row.input.value = "";
    } else if (typeof value === "number") {
      row.input.value = displayNumber(value);
    } else {
      row.input.value = String(value);
    }
  }

  /** Reject unparseable numerics before they ever reach the service. */
  validate(): boolean {
    this.clearErrors();
    let ok = true;
    for (const row of this.rows.values()) {
      if (row.field.kind !== "numeric") continue;
      const raw = row.input.value.trim();
      if (raw !== "" && !Number.isFinite(Number(raw))) {
        this.flag(row, "enter a number");
        ok = false;
      }
    }
    return ok;
  }

  /**
   * Surface a 422 next to the offending inputs. `detail` follows the service
   * convention "name: message; name: message", which maps back onto rows.
   */
  setErrors(fields: string[], detail: string): void {
    const byField = new Map<string, string>();
    for (const part of detail.split("; ")) {
      const sep = part.indexOf(": ");
      if (sep > 0) byField.set(part.slice(0, sep), part.slice(sep + 2));
    }
    for (const name of fields) {
      const row = this.rows.get(name);
      if (row) this.flag(row, byField.get(name) ?? "invalid value");
    }
  }

  clearErrors(): void {
    for (const row of this.rows.values()) {
      row.error.textContent = "";
      row.input.classList.remove("invalid");
    }
  }

  errorText(name: string): string {
    return this.rows.get(name)?.error.textContent ?? "";
  }

  private flag(row: FieldRow, message: string): void {
    row.error.textContent = message;
    row.input.classList.add("invalid");
  }
}
