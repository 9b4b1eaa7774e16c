/** Word tokenization mirroring the service's convention: maximal runs of
 * letters/digits, apostrophes allowed between runs.  Offsets count Unicode
 * code points (not UTF-16 units) so payload spans line up with the
 * server-side scoring. */

export interface Token {
  text: string;
  start: number; // code-point offset, inclusive
  end: number; // code-point offset, exclusive
}

const TOKEN_RE = /[\p{L}\p{N}]+(?:'[\p{L}\p{N}]+)*/gu;

/** Map each UTF-16 index of `text` to the number of code points before it. */
function codePointIndex(text: string): number[] {
  const index = new Array<number>(text.length + 1);
  let cp = 0;
  let i = 0;
  while (i < text.length) {
    index[i] = cp;
    const code = text.codePointAt(i)!;
    const width = code > 0xffff ? 2 : 1;
    if (width === 2) index[i + 1] = cp;
    i += width;
    cp += 1;
  }
  index[text.length] = cp;
  return index;
}

export function tokenize(text: string): Token[] {
  const cpAt = codePointIndex(text);
  const tokens: Token[] = [];
  const re = new RegExp(TOKEN_RE.source, TOKEN_RE.flags);
  for (const match of text.matchAll(re)) {
    const at = match.index!;
    tokens.push({
      text: match[0],
      start: cpAt[at],
      end: cpAt[at + match[0].length],
    });
  }
  return tokens;
}
