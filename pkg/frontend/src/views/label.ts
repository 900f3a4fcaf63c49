/** Labeling dialog: attach a positive or negative mark for one concept to
 *  every frame in the current selection. */

import { CONCEPT_NAME } from "../types";

export type Polarity = "positive" | "negative";

export interface LabelHandlers {
  onSubmit: (concept: string, polarity: Polarity) => void;
}

export class LabelDialog {
  private readonly root: HTMLElement;
  private readonly countLine: HTMLElement;
  private readonly conceptInput: HTMLInputElement;
  private readonly datalist: HTMLDataListElement;
  private readonly applyButton: HTMLButtonElement;
  private readonly errorLine: HTMLElement;
  private selectionSize = 0;

  constructor(container: HTMLElement, handlers: LabelHandlers) {
    const doc = container.ownerDocument;
    this.root = doc.createElement("div");
    this.root.className = "label-dialog";
    this.root.hidden = true;

    const title = doc.createElement("h3");
    title.textContent = "Label selection";
    this.root.appendChild(title);

    this.countLine = doc.createElement("p");
    this.countLine.className = "label-count";
    this.root.appendChild(this.countLine);

    this.conceptInput = doc.createElement("input");
    this.conceptInput.className = "label-concept";
    this.conceptInput.placeholder = "concept, e.g. jackhammer";
    this.conceptInput.setAttribute("list", "known-concepts");
    this.datalist = doc.createElement("datalist");
    this.datalist.id = "known-concepts";
    this.root.appendChild(this.conceptInput);
    this.root.appendChild(this.datalist);

    const polarityRow = doc.createElement("div");
    polarityRow.className = "label-polarity";
    for (const polarity of ["positive", "negative"] as const) {
      const lab = doc.createElement("label");
      const radio = doc.createElement("input");
      radio.type = "radio";
      radio.name = "polarity";
      radio.value = polarity;
      if (polarity === "positive") radio.checked = true;
      lab.appendChild(radio);
      lab.appendChild(doc.createTextNode(` ${polarity}`));
      polarityRow.appendChild(lab);
    }
    this.root.appendChild(polarityRow);

    this.errorLine = doc.createElement("p");
    this.errorLine.className = "label-error";
    this.errorLine.hidden = true;
    this.root.appendChild(this.errorLine);

    const buttons = doc.createElement("div");
    buttons.className = "label-buttons";
    this.applyButton = doc.createElement("button");
    this.applyButton.className = "label-apply";
    this.applyButton.textContent = "Apply";
    this.applyButton.addEventListener("click", () => {
      const concept = this.conceptInput.value.trim();
      if (!CONCEPT_NAME.test(concept)) {
        this.showError(
          "concept must start with a letter or digit and use only letters, digits, . _ -",
        );
        return;
      }
      if (this.selectionSize === 0) {
        this.showError("nothing selected to label");
        return;
      }
      handlers.onSubmit(concept, this.polarity());
      this.close();
    });
    const cancel = doc.createElement("button");
    cancel.className = "label-cancel";
    cancel.textContent = "Cancel";
    cancel.addEventListener("click", () => this.close());
    buttons.appendChild(this.applyButton);
    buttons.appendChild(cancel);
    this.root.appendChild(buttons);

    container.appendChild(this.root);
  }

  private polarity(): Polarity {
    const checked = this.root.querySelector<HTMLInputElement>(
      'input[name="polarity"]:checked',
    );
    return checked?.value === "negative" ? "negative" : "positive";
  }

  private showError(message: string): void {
    this.errorLine.textContent = message;
    this.errorLine.hidden = false;
  }

  open(selectionSize: number, knownConcepts: string[]): void {
    this.selectionSize = selectionSize;
    this.countLine.textContent = `${selectionSize.toLocaleString("en-US")} frames selected`;
    this.datalist.innerHTML = "";
    for (const concept of knownConcepts) {
      const option = this.root.ownerDocument.createElement("option");
      option.value = concept;
      this.datalist.appendChild(option);
    }
    this.errorLine.hidden = true;
    this.root.hidden = false;
  }

  close(): void {
    this.root.hidden = true;
  }

  get isOpen(): boolean {
    return !this.root.hidden;
  }
}
