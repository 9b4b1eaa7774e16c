/** Parameter kinds enabled in the annotation task. */
export type Kind = "sender" | "recipient" | "subject" | "attribute" | "tp";

export const CROWD_KINDS: Kind[] = ["sender", "recipient", "attribute", "tp"];

/** Fixed highlight palette, one color per parameter kind. */
export const PALETTE: Record<Kind, string> = {
  sender: "blue",
  recipient: "green",
  subject: "orange",
  attribute: "red",
  tp: "purple",
};

export const KIND_TITLES: Record<Kind, string> = {
  sender: "Sender",
  recipient: "Recipient",
  subject: "Subject",
  attribute: "Attribute",
  tp: "Transmission principle",
};
